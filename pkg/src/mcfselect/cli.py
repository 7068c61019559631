"""Command-line entry point: ``mcfselect <subcommand> ...``.

Output is one ``key=value`` record per line unless ``--pretty`` is given.
Exit codes: 0 success, 1 user error, 2 internal or consistency error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .dimacs import DimacsError, read_dimacs
from .features import extract_features, write_feature_table
from .generators import GeneratorId, load_corpus, plan_corpus, read_manifest, regenerate_corpus
from .learn import ArtifactError, ModelArtifact, fit_family, grid_search, load_grids, predict
from .solvers import AlgorithmId, SolverError, SolverOptions, Status, certify_optimal, solve

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UserError(Exception):
    pass


class InternalError(Exception):
    pass


def _emit(pairs: dict) -> None:
    print(" ".join(f"{k}={v}" for k, v in pairs.items()))


def _table(rows: list[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0])
    width = {c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) for c in cols}
    print("  ".join(c.ljust(width[c]) for c in cols))
    for r in rows:
        print("  ".join(str(r.get(c, "")).ljust(width[c]) for c in cols))


def _output(rows: list[dict], pretty: bool) -> None:
    if pretty:
        _table(rows)
    else:
        for r in rows:
            _emit(r)


def _read_instance(path):
    try:
        return read_dimacs(path)
    except OSError as e:
        raise UserError(f"cannot read {path}: {e.strerror}") from None


# subcommands


def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.manifest:
        made = regenerate_corpus(args.manifest, out)
    else:
        entries = []
        for g in args.generator or [g.value for g in GeneratorId]:
            grid = harness.select_grid(g, args.max_vertices, args.combinations, args.seed)
            entries += plan_corpus(grid, args.replicates, args.seed)
        if not entries:
            raise UserError("the selection contains no parameter combinations")
        out.mkdir(parents=True, exist_ok=True)
        made = harness.stage_generate(entries, out)
    _emit({"instances": len(made), "manifest": out / "manifest.tsv"})
    return EXIT_OK


def _solve_row(alg, inst, args) -> tuple[dict, bool]:
    res = solve(alg, inst, SolverOptions(debug=args.debug))
    row = {"algorithm": alg.name, "status": res.status.value}
    if res.status is Status.OPTIMAL:
        row["cost"] = res.cost
    ok = True
    if args.certify and res.status is Status.OPTIMAL:
        ok = certify_optimal(inst, res.flow)
        row["certified"] = "true" if ok else "false"
    return row, ok


def cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    algs = list(AlgorithmId) if args.algorithm.lower() == "all" else [AlgorithmId.parse(args.algorithm)]
    rows, ok = [], True
    for alg in algs:
        row, good = _solve_row(alg, inst, args)
        ok &= good
        rows.append(row)
    if len(rows) == 1 and not args.pretty:
        rows[0].pop("algorithm")
    _output(rows, args.pretty)
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_time(args) -> int:
    corpus = load_corpus(args.corpus)
    instances = {e.instance_id: inst for e, inst in corpus}
    policy = harness.TimeoutPolicy(args.timeout_factor, int(args.timeout_floor_ms * 1_000_000))
    records = harness.stage_time(instances, args.repetitions, policy, args.workers)
    harness.write_timings(records, args.out)
    counts = {}
    for r in records:
        counts[r.status] = counts.get(r.status, 0) + 1
    _emit({"records": len(records), **{k.lower(): v for k, v in sorted(counts.items())}, "out": args.out})
    return EXIT_OK


def cmd_featurize(args) -> int:
    rows = []
    for src in args.inputs:
        p = Path(src)
        if p.is_dir():
            rows += [(e.instance_id, extract_features(inst)) for e, inst in load_corpus(p)]
        else:
            rows.append((p.stem, extract_features(_read_instance(p))))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_feature_table(rows, fh)
        _emit({"instances": len(rows), "out": args.out})
    else:
        sys.stdout.write(write_feature_table(rows))
    return EXIT_OK


def cmd_label(args) -> int:
    records = harness.read_timings(args.timings)
    gens = {e.instance_id: e.params.generator.value for e in read_manifest(args.manifest)} if args.manifest else None
    reasons: dict = {}
    labels, excluded = harness.label_winners(records, args.timeout_policy, gens, reasons)
    harness.write_labels(labels, args.out)
    _emit({"labeled": len(labels), "excluded": len(excluded), "out": args.out})
    return EXIT_OK


def _dataset(args):
    return harness.load_dataset(args.features, args.labels)


def cmd_split(args) -> int:
    data = _dataset(args)
    train, test = harness.stage_split(data, args.test_fraction, args.seed, Path(args.out))
    _emit({"train": len(train), "test": len(test), "out": args.out})
    return EXIT_OK


def _part(args, data, part):
    split = harness.read_split(args.split)
    idx = [i for i, iid in enumerate(data.ids) if split.get(iid) == part]
    if not idx:
        raise UserError(f"split file has no {part} instances for this dataset")
    return data.subset(idx)


def cmd_train(args) -> int:
    train = _part(args, _dataset(args), "train")
    grid = load_grids(args.grid)[args.family]
    res = grid_search(train, args.family, grid, args.folds, args.seed)
    if args.cv_report:
        Path(args.cv_report).write_text(res.report_csv())
    model = fit_family(args.family, train, res.best_params, args.seed)
    model.metadata["cv_mean_accuracy"] = res.best_mean
    model.save(args.out)
    _emit({"family": args.family, "cv_accuracy": "%.6f" % res.best_mean,
           "params": json.dumps(res.best_params, sort_keys=True, separators=(",", ":")), "out": args.out})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    data = _dataset(args)
    train, test = _part(args, data, "train"), _part(args, data, "test")
    models = [ModelArtifact.load(p) for p in args.model]
    rows = harness.evaluate(models, test, train.y)
    if args.out:
        harness.write_report(rows, args.out)
    _output([{"family": r.family, "accuracy": "%.6f" % r.accuracy, "baseline": "%.6f" % r.baseline_accuracy,
              "n_test": r.n_test} for r in rows], args.pretty)
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model = ModelArtifact.load(args.model)
    except OSError as e:
        raise UserError(f"cannot read {args.model}: {e.strerror}") from None
    inst = _read_instance(args.instance)
    alg = predict(model, extract_features(inst))
    print(alg.name)
    if args.run:
        res = solve(alg, inst)
        pairs = {"status": res.status.value}
        if res.status is Status.OPTIMAL:
            pairs["cost"] = res.cost
        _emit(pairs)
    return EXIT_OK


def cmd_report(args) -> int:
    labels = harness.read_labels(args.labels)
    gens = {e.instance_id: e.params.generator.value for e in read_manifest(args.manifest)} if args.manifest else None
    table = harness.winner_distribution(labels, gens)
    if args.out:
        Path(args.out).write_text(table.to_csv())
    if args.pretty:
        print(table.counts.to_string())
        print()
        print(table.percent.round(2).to_string())
    else:
        for alg in table.counts.index:
            _emit({"algorithm": alg, **{g: int(table.counts.loc[alg, g]) for g in table.counts.columns},
                   "percent": "%.2f" % table.percent.loc[alg, "All"]})
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = harness.ExperimentConfig.load(args.config)
    res = harness.run_experiment(cfg, force=args.force, progress=(lambda m: print(m, file=sys.stderr)) if args.verbose else None)
    _emit({"report": res.output_dir / "report.csv", "labeled": len(res.labels), "excluded": len(res.excluded)})
    for r in res.report:
        _emit({"family": r.family, "accuracy": "%.6f" % r.accuracy, "n_test": r.n_test})
    return EXIT_OK


# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcfselect", description="Minimum cost flow solver portfolio and algorithm selector.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__import__('mcfselect').__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("generate", cmd_generate, "Generate a DIMACS corpus and its manifest.")
    sp.add_argument("--out", required=True, help="corpus directory to write")
    sp.add_argument("--generator", action="append", choices=[g.value for g in GeneratorId],
                    help="generator family (repeatable; default all four)")
    sp.add_argument("--max-vertices", type=int, default=None, help="drop grid combinations with more vertices")
    sp.add_argument("--combinations", type=int, default=None, help="seeded sample size per family (default all)")
    sp.add_argument("--replicates", type=int, default=2, help="instances per parameter combination")
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--manifest", help="rebuild exactly the instances listed in this manifest instead")

    sp = add("solve", cmd_solve, "Solve one DIMACS instance.")
    sp.add_argument("instance", help="DIMACS min file")
    sp.add_argument("--algorithm", default="NS", help="SCC, MMCC, CAT, SSP, CAS, NS, CS2 or 'all'")
    sp.add_argument("--certify", action="store_true", help="check optimality by negative-cycle search")
    sp.add_argument("--debug", action="store_true", help="enable solver invariant checks")
    sp.add_argument("--pretty", action="store_true", help="print an aligned table")

    sp = add("time", cmd_time, "Time all seven solvers on a corpus.")
    sp.add_argument("corpus", help="corpus directory containing manifest.tsv")
    sp.add_argument("--out", default="timings.csv", help="timings CSV to write")
    sp.add_argument("--repetitions", type=int, default=3, help="timed runs after one warm-up")
    sp.add_argument("--timeout-factor", type=float, default=100.0, help="multiple of the bucket's median NS time")
    sp.add_argument("--timeout-floor-ms", type=float, default=10_000.0, help="lower bound on the limit")
    sp.add_argument("--workers", type=int, default=1, help="parallel processes (perturbs timings)")

    sp = add("featurize", cmd_featurize, "Extract the 21 features of instances.")
    sp.add_argument("inputs", nargs="+", help="DIMACS files or corpus directories")
    sp.add_argument("--out", help="features CSV (default stdout)")

    sp = add("label", cmd_label, "Label each instance with its fastest solver.")
    sp.add_argument("timings", help="timings CSV")
    sp.add_argument("--manifest", help="corpus manifest for generator metadata")
    sp.add_argument("--timeout-policy", choices=["exclude", "lose"], default="exclude",
                    help="drop instances with a timeout, or only bar timed-out solvers from winning")
    sp.add_argument("--out", default="labels.csv", help="labels CSV to write")

    def data_args(sp, split=True):
        sp.add_argument("--features", required=True, help="features CSV")
        sp.add_argument("--labels", required=True, help="labels CSV")
        if split:
            sp.add_argument("--split", required=True, help="split CSV")

    sp = add("split", cmd_split, "Split labeled instances into train and test parts.")
    data_args(sp, split=False)
    sp.add_argument("--test-fraction", type=float, default=0.2, help="share of instances held out")
    sp.add_argument("--seed", type=int, default=0, help="shuffle seed")
    sp.add_argument("--out", default="split.csv", help="split CSV to write")

    sp = add("train", cmd_train, "Grid-search and fit one classifier family.")
    data_args(sp)
    sp.add_argument("--family", required=True, choices=list(harness.FAMILIES), help="classifier family")
    sp.add_argument("--grid", help="JSON file overriding hyperparameter grids")
    sp.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    sp.add_argument("--seed", type=int, default=0, help="training seed")
    sp.add_argument("--out", required=True, help="model artifact to write")
    sp.add_argument("--cv-report", help="CSV of per-cell fold accuracies")

    sp = add("evaluate", cmd_evaluate, "Held-out accuracy of models against the single-best baseline.")
    data_args(sp)
    sp.add_argument("--model", action="append", required=True, help="model artifact (repeatable)")
    sp.add_argument("--out", help="report CSV to write")
    sp.add_argument("--pretty", action="store_true", help="print an aligned table")

    sp = add("predict", cmd_predict, "Recommend a solver for one instance.")
    sp.add_argument("instance", help="DIMACS min file")
    sp.add_argument("--model", required=True, help="model artifact")
    sp.add_argument("--run", action="store_true", help="also solve with the recommended solver")

    sp = add("report", cmd_report, "Winner distribution per generator family.")
    sp.add_argument("labels", help="labels CSV")
    sp.add_argument("--manifest", help="manifest for labels without generator metadata")
    sp.add_argument("--out", help="CSV to write")
    sp.add_argument("--pretty", action="store_true", help="print count and percentage tables")

    sp = add("run", cmd_run, "Run the whole experiment from a JSON config.")
    sp.add_argument("config", help="experiment config JSON")
    sp.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    sp.add_argument("--verbose", action="store_true", help="log stage progress to stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (harness.ConsistencyError, harness.StageError, SolverError, InternalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (UserError, DimacsError, ArtifactError, harness.ConfigError, FileNotFoundError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
