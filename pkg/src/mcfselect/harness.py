"""Timing, winner labelling, reports and the end-to-end experiment pipeline."""
from __future__ import annotations

import csv
import json
import math
import statistics
import time
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from .features import FEATURE_NAMES, extract_features, read_feature_table, write_feature_table
from .generators import GeneratorId, generate, parameter_grid, plan_corpus, write_manifest
from .graph import MCFInstance
from .learn import (
    Dataset,
    ModelArtifact,
    accuracy,
    fit_family,
    grid_search,
    load_grids,
    predict_batch,
    split_indices,
)
from .solvers import AlgorithmId, SolverOptions, SolverTimeout, Status, solve

OPTIMAL, INFEASIBLE, TIMEOUT, ERROR = "Optimal", "Infeasible", "Timeout", "Error"
GENERATOR_ORDER = [g.value for g in GeneratorId]
FAMILIES = ("knn", "decision_tree", "random_forest", "adaboost")
BASELINE = "baseline_single_best"


class ConsistencyError(RuntimeError):
    """Solvers disagree on feasibility or optimal cost for one instance."""


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class TimingRecord:
    instance_id: str
    algorithm: AlgorithmId
    repetitions: int
    durations: list
    median_ns: Optional[int]
    status: str
    cost: Optional[int] = None
    message: str = ""


@dataclass(frozen=True)
class WinnerLabel:
    instance_id: str
    winner: AlgorithmId
    margin_ns: int
    generator: str = ""


# timing


def _same_result(a, b) -> bool:
    if a.status != b.status or a.cost != b.cost:
        return False
    if a.flow is None or b.flow is None:
        return a.flow is None and b.flow is None
    return bool(np.array_equal(a.flow, b.flow))


def time_solver(
    algorithm,
    instance: MCFInstance,
    repetitions: int = 3,
    timeout_ns: Optional[int] = None,
    instance_id: str = "",
    solver: Optional[Callable] = None,
    clock: Callable[[], int] = time.perf_counter_ns,
) -> TimingRecord:
    """Median wall time of ``repetitions`` solves after one untimed warm-up.

    ``solver(instance, options)`` defaults to the portfolio dispatcher. Any
    run over ``timeout_ns`` makes the record a Timeout; any exception or a
    result that changes between repetitions makes it an Error.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    alg = AlgorithmId.parse(algorithm)
    run = solver if solver is not None else (lambda inst, opts: solve(alg, inst, opts))
    opts = SolverOptions(time_limit_ns=timeout_ns)

    def record(status, durations, cost=None, message=""):
        med = int(statistics.median(durations)) if durations else None
        return TimingRecord(instance_id, alg, repetitions, list(durations), med, status, cost, message)

    try:
        t0 = clock()
        first = run(instance, opts)
        warm = clock() - t0
        if timeout_ns is not None and warm > timeout_ns:
            return record(TIMEOUT, [])
        durations = []
        for _ in range(repetitions):
            t0 = clock()
            res = run(instance, opts)
            dt = clock() - t0
            if timeout_ns is not None and dt > timeout_ns:
                return record(TIMEOUT, durations)
            if not _same_result(first, res):
                return record(ERROR, durations, message="result changed between repetitions")
            durations.append(dt)
    except SolverTimeout:
        return record(TIMEOUT, [])
    except Exception as e:  # solver failures become data, not crashes
        return record(ERROR, [], message=f"{type(e).__name__}: {e}")
    status = OPTIMAL if first.status is Status.OPTIMAL else INFEASIBLE
    return record(status, durations, first.cost if status == OPTIMAL else None)


TIMING_COLUMNS = ["instance_id", "algorithm", "status", "median_ns", "cost", "repetitions", "durations_ns", "message"]


def write_timings(records: Sequence[TimingRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_COLUMNS)
        for r in records:
            w.writerow([
                r.instance_id, r.algorithm.name, r.status, "" if r.median_ns is None else r.median_ns,
                "" if r.cost is None else r.cost, r.repetitions, ";".join(map(str, r.durations)), r.message,
            ])


def read_timings(path) -> list[TimingRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            durations = [int(x) for x in row["durations_ns"].split(";") if x]
            out.append(TimingRecord(
                row["instance_id"], AlgorithmId.parse(row["algorithm"]), int(row["repetitions"]), durations,
                int(row["median_ns"]) if row["median_ns"] else None, row["status"],
                int(row["cost"]) if row["cost"] else None, row.get("message", ""),
            ))
    return out


# labelling


def label_winners(
    records: Sequence[TimingRecord],
    timeout_policy: str = "exclude",
    generators: Optional[dict] = None,
    reasons: Optional[dict] = None,
) -> tuple[list[WinnerLabel], list[str]]:
    """Winner per instance and the ids left out.

    An instance is excluded when its solvers report Infeasible, or when any
    record is a Timeout (policy ``exclude``) or an Error. Under policy
    ``lose`` a timed-out solver simply cannot win. Feasibility or cost
    disagreement between solvers raises ConsistencyError. Ties go to the
    lowest AlgorithmId code.
    """
    if timeout_policy not in ("exclude", "lose"):
        raise ValueError(f"unknown timeout policy {timeout_policy!r}")
    by_inst: dict = defaultdict(dict)
    order = []
    for r in records:
        if r.instance_id not in by_inst:
            order.append(r.instance_id)
        by_inst[r.instance_id][r.algorithm] = r
    labels, excluded = [], []
    reasons = {} if reasons is None else reasons
    for iid in order:
        recs = by_inst[iid]
        missing = [a.name for a in AlgorithmId if a not in recs]
        if missing:
            raise ValueError(f"instance {iid} lacks records for {missing}")
        statuses = {a: r.status for a, r in recs.items()}
        kinds = set(statuses.values())
        if INFEASIBLE in kinds and OPTIMAL in kinds:
            raise ConsistencyError(f"solvers disagree on feasibility of {iid}: {statuses}")
        costs = {r.cost for r in recs.values() if r.status == OPTIMAL}
        if len(costs) > 1:
            raise ConsistencyError(f"solvers disagree on the optimal cost of {iid}: {costs}")
        reason = None
        if INFEASIBLE in kinds:
            reason = "infeasible"
        elif ERROR in kinds:
            reason = "error"
        elif TIMEOUT in kinds and (timeout_policy == "exclude" or OPTIMAL not in kinds):
            reason = "timeout"
        if reason:
            excluded.append(iid)
            reasons[iid] = reason
            continue
        ranked = sorted((r.median_ns, int(a)) for a, r in recs.items() if r.status == OPTIMAL)
        win_ns, win = ranked[0]
        margin = ranked[1][0] - win_ns if len(ranked) > 1 else 0
        gen = generators.get(iid, "") if generators else ""
        labels.append(WinnerLabel(iid, AlgorithmId(win), int(margin), gen))
    return labels, excluded


LABEL_COLUMNS = ["instance_id", "winner", "margin_ns", "generator"]


def write_labels(labels: Sequence[WinnerLabel], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABEL_COLUMNS)
        for lab in labels:
            w.writerow([lab.instance_id, lab.winner.name, lab.margin_ns, lab.generator])


def read_labels(path) -> list[WinnerLabel]:
    with open(path, newline="") as fh:
        return [
            WinnerLabel(r["instance_id"], AlgorithmId.parse(r["winner"]), int(r["margin_ns"]), r["generator"])
            for r in csv.DictReader(fh)
        ]


# reports


@dataclass
class WinnerTable:
    counts: pd.DataFrame
    percent: pd.DataFrame

    def to_csv(self) -> str:
        rows = []
        for group in self.counts.columns:
            for alg in self.counts.index:
                rows.append({
                    "group": group, "algorithm": alg,
                    "count": int(self.counts.loc[alg, group]),
                    "percent": round(float(self.percent.loc[alg, group]), 6),
                })
        return pd.DataFrame(rows).to_csv(index=False, lineterminator="\n")


def winner_distribution(labels: Sequence[WinnerLabel], generators: Optional[dict] = None) -> WinnerTable:
    """Winner counts per generator plus an overall column, with a Total row.

    ``generators`` maps instance ids to families for labels that do not
    carry one; an id with no known family is an error.
    """
    algs = [a.name for a in AlgorithmId]
    counts = pd.DataFrame(0, index=algs + ["Total"], columns=GENERATOR_ORDER + ["All"], dtype=np.int64)
    for lab in labels:
        gen = lab.generator or (generators or {}).get(lab.instance_id)
        if not gen:
            raise KeyError(f"unknown instance id {lab.instance_id!r}")
        gen = GeneratorId.parse(gen).value
        for col in (gen, "All"):
            counts.loc[lab.winner.name, col] += 1
            counts.loc["Total", col] += 1
    totals = counts.loc["Total"].replace(0, np.nan)
    percent = (counts.div(totals, axis=1) * 100).fillna(0.0)
    return WinnerTable(counts, percent)


def labels_from_counts(counts: dict, generator: str = "") -> list[WinnerLabel]:
    """Synthetic label list realising ``{algorithm: count}``."""
    out = []
    for alg, k in counts.items():
        a = AlgorithmId.parse(alg)
        out += [WinnerLabel(f"{generator or 'x'}-{a.name}-{i}", a, 0, generator) for i in range(int(k))]
    return out


@dataclass
class EvaluationRow:
    family: str
    hyperparameters: dict
    accuracy: float
    baseline_accuracy: float
    n_test: int


def evaluate(models: Sequence[ModelArtifact], test: Dataset, train_labels) -> list[EvaluationRow]:
    """Held-out accuracy of every model next to the single-best baseline.

    The baseline always predicts the most frequent training label (lowest
    code on ties) and is reported as its own row.
    """
    if len(test) == 0:
        raise ValueError("empty test set")
    best = int(np.argmax(np.bincount(np.asarray(train_labels, dtype=np.int64), minlength=len(AlgorithmId))))
    base = float(accuracy([best] * len(test), test.y))
    rows = [EvaluationRow(BASELINE, {"label": AlgorithmId(best).name}, base, base, len(test))]
    for m in models:
        acc = float(accuracy(predict_batch(m, test.X), test.y))
        rows.append(EvaluationRow(m.family, m.hyperparameters, acc, base, len(test)))
    return rows


def write_report(rows: Sequence[EvaluationRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "hyperparameters", "accuracy", "baseline_accuracy", "n_test"])
        for r in rows:
            w.writerow([r.family, json.dumps(r.hyperparameters, sort_keys=True), "%.6f" % r.accuracy,
                        "%.6f" % r.baseline_accuracy, r.n_test])


def read_report(path) -> pd.DataFrame:
    return pd.read_csv(path)


# experiment configuration


@dataclass
class TimeoutPolicy:
    """Per-instance limit ``max(floor_ns, factor * median NS time of the size bucket)``."""

    factor: float = 100.0
    floor_ns: int = 10_000_000_000
    policy: str = "exclude"


@dataclass
class ExperimentConfig:
    output_dir: str
    generators: dict = field(default_factory=dict)
    manifest: Optional[str] = None
    seed: int = 0
    repetitions: int = 3
    timeout: TimeoutPolicy = field(default_factory=TimeoutPolicy)
    test_fraction: float = 0.2
    folds: int = 5
    families: list = field(default_factory=lambda: list(FAMILIES))
    grids: dict = field(default_factory=dict)
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "output_dir" not in d or not d["output_dir"]:
            raise ConfigError("config needs an output_dir")
        if isinstance(d.get("timeout"), dict):
            d["timeout"] = TimeoutPolicy(**d["timeout"])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, TypeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None

    def validate(self) -> None:
        if int(self.repetitions) < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0 < float(self.test_fraction) < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if int(self.folds) < 2:
            raise ConfigError("folds must be at least 2")
        if self.timeout.policy not in ("exclude", "lose"):
            raise ConfigError("timeout policy must be 'exclude' or 'lose'")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown classifier family {fam!r}")
        if not self.generators and not self.manifest:
            raise ConfigError("config needs generators or a manifest")
        for g, spec in self.generators.items():
            GeneratorId.parse(g)
            if int(spec.get("replicates", 1)) < 1:
                raise ConfigError("replicates must be at least 1")


def select_grid(generator, max_vertices: Optional[int], combinations: Optional[int], seed: int):
    """A seeded sample of a family's parameter grid, in grid order."""
    grid = parameter_grid(generator)
    if max_vertices is not None:
        grid = [p for p in grid if p.num_vertices <= max_vertices]
    if combinations is not None and combinations < len(grid):
        g = GeneratorId.parse(generator)
        rng = np.random.default_rng([seed, GENERATOR_ORDER.index(g.value)])
        keep = np.sort(rng.choice(len(grid), combinations, replace=False))
        grid = [grid[i] for i in keep]
    return grid


def plan_from_config(cfg: ExperimentConfig):
    from .generators import read_manifest

    if cfg.manifest:
        return read_manifest(cfg.manifest)
    entries = []
    for g in GENERATOR_ORDER:
        spec = next((v for k, v in cfg.generators.items() if GeneratorId.parse(k).value == g), None)
        if spec is None:
            continue
        grid = select_grid(g, spec.get("max_vertices"), spec.get("combinations"), cfg.seed)
        entries += plan_corpus(grid, int(spec.get("replicates", 2)), cfg.seed)
    return entries


# pipeline stages; every stage reads and writes plain files


def stage_generate(entries, corpus_dir: Path) -> dict:
    from .dimacs import save_dimacs

    instances = {}
    for e in entries:
        inst = generate(e.params)
        target = corpus_dir / e.path
        target.parent.mkdir(parents=True, exist_ok=True)
        save_dimacs(inst, target)
        instances[e.instance_id] = inst
    write_manifest(entries, corpus_dir / "manifest.tsv")
    return instances


def size_bucket(instance: MCFInstance) -> int:
    return max(0, math.ceil(math.log2(max(instance.num_vertices, 1))))


def _warm_up() -> None:
    tiny = MCFInstance.from_arcs(3, [(0, 1, 1, 4), (0, 2, 5, 10), (1, 2, 1, 4)], [5, 0, -5])
    for a in AlgorithmId:
        solve(a, tiny)


def _time_all(args):
    iid, inst, algs, reps, timeout = args
    return [time_solver(a, inst, reps, timeout, iid) for a in algs]


def stage_time(instances: dict, repetitions: int, policy: TimeoutPolicy, workers: int = 1, progress=None):
    """Time NS everywhere first to set per-bucket limits, then the other six solvers.

    ``workers > 1`` runs instances in parallel processes, which perturbs
    timings; labels should come from sequential runs.
    """
    _warm_up()
    ids = list(instances)
    others = [a for a in AlgorithmId if a is not AlgorithmId.NS]

    def run(jobs):
        if workers > 1:
            with ProcessPoolExecutor(workers, initializer=_warm_up) as ex:
                return list(ex.map(_time_all, jobs, chunksize=4))
        out = []
        for i, j in enumerate(jobs):
            out.append(_time_all(j))
            if progress:
                progress(i + 1, len(jobs))
        return out

    ns = {iid: recs[0] for iid, recs in zip(ids, run([(i, instances[i], [AlgorithmId.NS], repetitions, policy.floor_ns) for i in ids]))}
    buckets = defaultdict(list)
    for iid in ids:
        if ns[iid].median_ns is not None:
            buckets[size_bucket(instances[iid])].append(ns[iid].median_ns)
    limits = {b: max(int(policy.floor_ns), int(policy.factor * statistics.median(v))) for b, v in buckets.items()}
    jobs = [(i, instances[i], others, repetitions, limits.get(size_bucket(instances[i]), int(policy.floor_ns))) for i in ids]
    records = []
    for iid, recs in zip(ids, run(jobs)):
        records.append(ns[iid])
        records.extend(recs)
    by = defaultdict(list)
    for r in records:
        by[r.instance_id].append(r)
    return [r for iid in ids for r in sorted(by[iid], key=lambda r: int(r.algorithm))]


def stage_features(instances: dict, path: Path) -> dict:
    rows = [(iid, extract_features(inst)) for iid, inst in instances.items() if inst.num_arcs > 0]
    with open(path, "w", newline="") as fh:
        write_feature_table(rows, fh)
    return dict(rows)


def build_dataset(labels: Sequence[WinnerLabel], features: dict) -> Dataset:
    kept = [lab for lab in labels if lab.instance_id in features]
    X = np.array([list(features[lab.instance_id]) for lab in kept], dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
    y = np.array([int(lab.winner) for lab in kept], dtype=np.int64)
    return Dataset([lab.instance_id for lab in kept], X, y, [lab.generator for lab in kept])


def stage_split(data: Dataset, test_fraction: float, seed: int, path: Path):
    tr, te = split_indices(len(data), test_fraction, seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "part"])
        part = np.empty(len(data), dtype=object)
        part[tr], part[te] = "train", "test"
        for iid, p in zip(data.ids, part):
            w.writerow([iid, p])
    return data.subset(tr), data.subset(te)


def read_split(path) -> dict:
    with open(path, newline="") as fh:
        return {r["instance_id"]: r["part"] for r in csv.DictReader(fh)}


def stage_train(train: Dataset, families, grids: dict, folds: int, seed: int, model_dir: Path) -> list[ModelArtifact]:
    model_dir.mkdir(parents=True, exist_ok=True)
    models = []
    for fam in families:
        res = grid_search(train, fam, grids[fam], folds, seed)
        (model_dir / f"{fam}_cv.csv").write_text(res.report_csv())
        model = fit_family(fam, train, res.best_params, seed)
        model.metadata["cv_mean_accuracy"] = res.best_mean
        model.save(model_dir / f"{fam}.json")
        models.append(model)
    return models


@dataclass
class ExperimentResult:
    output_dir: Path
    report: list
    labels: list
    excluded: list
    distribution: WinnerTable


def run_experiment(config, force: bool = False, progress=None) -> ExperimentResult:
    """generate -> time -> label -> featurize -> split -> grid search -> evaluate.

    Each stage writes its output under ``output_dir``; a failure raises
    StageError naming the stage and leaves earlier outputs in place.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    out = Path(cfg.output_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(f"{out} exists and is not empty; pass force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(_config_dict(cfg), indent=1, sort_keys=True))
    grids = load_grids()
    grids.update(cfg.grids)

    def stage(name, fn, *args):
        if progress:
            progress(f"stage {name}")
        try:
            return fn(*args)
        except (StageError, KeyboardInterrupt):
            raise
        except Exception as e:
            raise StageError(name, e) from e

    entries = stage("plan", plan_from_config, cfg)
    gens = {e.instance_id: e.params.generator.value for e in entries}
    instances = stage("generate", stage_generate, entries, out / "corpus")
    records = stage("time", stage_time, instances, int(cfg.repetitions), cfg.timeout, int(cfg.workers))
    write_timings(records, out / "timings.csv")
    reasons: dict = {}
    labels, excluded = stage("label", label_winners, records, cfg.timeout.policy, gens, reasons)
    write_labels(labels, out / "labels.csv")
    with open(out / "excluded.csv", "w") as fh:
        fh.write("instance_id,reason\n" + "".join(f"{i},{reasons[i]}\n" for i in excluded))
    dist = stage("report", winner_distribution, labels)
    (out / "winner_distribution.csv").write_text(dist.to_csv())
    feats = stage("featurize", stage_features, {i: instances[i] for i in instances}, out / "features.csv")
    data = build_dataset(labels, feats)
    train, test = stage("split", stage_split, data, float(cfg.test_fraction), cfg.seed, out / "split.csv")
    # no test instance may reach any training or validation stage
    assert not set(train.ids) & set(test.ids)
    models = stage("train", stage_train, train, cfg.families, grids, int(cfg.folds), cfg.seed, out / "models")
    rows = stage("evaluate", evaluate, models, test, train.y)
    write_report(rows, out / "report.csv")
    return ExperimentResult(out, rows, labels, excluded, dist)


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = dict(cfg.__dict__)
    d["timeout"] = dict(cfg.timeout.__dict__)
    return d


def load_dataset(features_path, labels_path) -> Dataset:
    with open(features_path) as fh:
        feats = dict(read_feature_table(fh.read()))
    return build_dataset(read_labels(labels_path), feats)
