import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfselect import harness
from mcfselect.harness import (
    BASELINE,
    ConfigError,
    ConsistencyError,
    ExperimentConfig,
    StageError,
    TimingRecord,
    WinnerLabel,
    evaluate,
    label_winners,
    labels_from_counts,
    read_labels,
    read_timings,
    run_experiment,
    time_solver,
    winner_distribution,
    write_labels,
    write_timings,
)
from mcfselect.learn import Dataset, constant_model, fit_decision_tree
from mcfselect.solvers import AlgorithmId, SolveResult, SolverTimeout, Status

TABLE2 = {
    "Netgen": {"SSP": 2122, "CAS": 113, "NS": 12250, "CS2": 783},
    "Gridgen": {"SCC": 1, "SSP": 3477, "CAS": 200, "NS": 14100, "CS2": 202},
    "Gridgraph": {"SCC": 5, "MMCC": 2, "CAT": 84, "SSP": 9836, "CAS": 1212, "NS": 10743, "CS2": 80},
    "Goto": {"NS": 17913, "CS2": 7},
}

OK = SolveResult(Status.OPTIMAL, np.array([5]), 15, 1)


def sleeper(ms, result=OK):
    def run(instance, options):
        time.sleep(ms / 1000)
        return result

    return run


def scripted_clock(values):
    it = iter(values)
    return lambda: next(it)


def rec(iid, alg, median, status="Optimal", cost=1):
    durations = [median] * 3 if median is not None else []
    return TimingRecord(iid, AlgorithmId.parse(alg), 3, durations, median, status, cost if status == "Optimal" else None)


def full(iid, medians, status="Optimal", cost=1):
    return [rec(iid, a, medians.get(a.name, 100), status, cost) for a in AlgorithmId]


# timing


def test_fake_solver_median(t1):
    r10 = time_solver("NS", t1, 3, solver=sleeper(10))
    r20 = time_solver("NS", t1, 3, solver=sleeper(20))
    assert 10_000_000 <= r10.median_ns < 25_000_000
    assert r20.median_ns > r10.median_ns
    assert r10.status == "Optimal" and r10.cost == 15 and len(r10.durations) == 3


def test_median_resists_outliers(t1):
    # warm-up 0..5, then runs of 10, 1000 and 12 ticks
    clock = scripted_clock([0, 5, 100, 110, 200, 1200, 1300, 1312])
    r = time_solver("NS", t1, 3, solver=lambda i, o: OK, clock=clock)
    assert r.durations == [10, 1000, 12] and r.median_ns == 12


def test_single_repetition(t1):
    r = time_solver("SSP", t1, 1, solver=lambda i, o: OK, clock=scripted_clock([0, 1, 10, 17]))
    assert r.durations == [7] and r.median_ns == 7


def test_infeasible_records_durations(t3):
    for alg in AlgorithmId:
        r = time_solver(alg, t3, 2)
        assert r.status == "Infeasible" and len(r.durations) == 2 and r.cost is None


def test_real_solver_cost(t2):
    assert time_solver("CS2", t2, 1).cost == 13


def test_repetitions_validated(t1):
    with pytest.raises(ValueError):
        time_solver("NS", t1, 0)


def test_timeout_and_errors(t1):
    assert time_solver("NS", t1, 3, timeout_ns=5_000_000, solver=sleeper(20)).status == "Timeout"

    def raises(i, o):
        raise SolverTimeout("slow")

    assert time_solver("NS", t1, 3, solver=raises).status == "Timeout"

    def broken(i, o):
        raise RuntimeError("bug")

    r = time_solver("NS", t1, 3, solver=broken)
    assert r.status == "Error" and "bug" in r.message
    flip = iter([OK, SolveResult(Status.OPTIMAL, np.array([4]), 12, 1)] * 3)
    assert time_solver("NS", t1, 3, solver=lambda i, o: next(flip)).status == "Error"


def test_timing_csv_round_trip(tmp_path, t1, t3):
    recs = [time_solver(a, t, 2, instance_id=n) for n, t in (("a", t1), ("b", t3)) for a in AlgorithmId]
    write_timings(recs, tmp_path / "t.csv")
    assert read_timings(tmp_path / "t.csv") == recs
    header = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert header[:6] == ["instance_id", "algorithm", "status", "median_ns", "cost", "repetitions"]


# labelling


def test_unique_minimum():
    labels, excluded = label_winners(full("x", {"NS": 5}))
    assert labels == [WinnerLabel("x", AlgorithmId.NS, 95)] and excluded == []


def test_tie_goes_to_lower_code():
    labels, _ = label_winners(full("x", {"NS": 5, "SSP": 5}))
    assert labels[0].winner is AlgorithmId.SSP and labels[0].margin_ns == 0


def test_infeasible_excluded():
    reasons = {}
    labels, excluded = label_winners(full("x", {}, "Infeasible") + full("y", {"CS2": 1}), reasons=reasons)
    assert excluded == ["x"] and reasons == {"x": "infeasible"}
    assert [l.instance_id for l in labels] == ["y"]


def test_consistency_failures():
    recs = full("x", {})
    recs[2] = rec("x", "CAT", 50, "Infeasible")
    with pytest.raises(ConsistencyError):
        label_winners(recs)
    recs = full("x", {})
    recs[4] = rec("x", "CAS", 50, cost=2)
    with pytest.raises(ConsistencyError):
        label_winners(recs)
    with pytest.raises(ValueError, match="lacks records"):
        label_winners(full("x", {})[:-1])


def test_timeout_policies():
    recs = full("x", {"NS": 5})
    recs[1] = TimingRecord("x", AlgorithmId.MMCC, 3, [], None, "Timeout")
    assert label_winners(recs)[1] == ["x"]
    labels, excluded = label_winners(recs, "lose")
    assert labels[0].winner is AlgorithmId.NS and not excluded
    only = [TimingRecord("y", a, 3, [], None, "Timeout") for a in AlgorithmId]
    assert label_winners(only, "lose")[1] == ["y"]
    with pytest.raises(ValueError):
        label_winners(recs, "ignore")


@settings(max_examples=200)
@given(st.lists(st.lists(st.integers(1, 50), min_size=7, max_size=7), min_size=1, max_size=10), st.data())
def test_winner_well_defined(medians, data):
    recs = []
    infeasible = set()
    for i, row in enumerate(medians):
        if data.draw(st.booleans()):
            recs += full(str(i), {}, "Infeasible")
            infeasible.add(str(i))
        else:
            recs += [rec(str(i), a, m) for a, m in zip(AlgorithmId, row)]
    labels, excluded = label_winners(recs)
    assert set(excluded) == infeasible
    for lab in labels:
        row = medians[int(lab.instance_id)]
        assert row[int(lab.winner)] == min(row)
        assert int(lab.winner) == row.index(min(row))
        assert lab.margin_ns == sorted(row)[1] - min(row) >= 0


def test_labels_csv_round_trip(tmp_path):
    labels = [WinnerLabel("a", AlgorithmId.NS, 5, "Goto"), WinnerLabel("b", AlgorithmId.SSP, 0, "Netgen")]
    write_labels(labels, tmp_path / "l.csv")
    assert read_labels(tmp_path / "l.csv") == labels
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "instance_id,winner,margin_ns,generator"


# reports


def table2_labels():
    out = []
    for gen, counts in TABLE2.items():
        out += labels_from_counts(counts, gen)
    return out


def test_table2_overall_column():
    t = winner_distribution(table2_labels())
    assert t.counts["All"].tolist() == [6, 2, 84, 15435, 1525, 55006, 1072, 73130]
    assert t.counts["Goto"].tolist() == [0, 0, 0, 0, 0, 17913, 7, 17920]
    assert t.counts.loc["Total"].tolist() == [15268, 17980, 21962, 17920, 73130]
    assert list(t.counts.columns) == ["Netgen", "Gridgen", "Gridgraph", "Goto", "All"]


def test_report_arithmetic():
    t = winner_distribution(table2_labels())
    for col in t.counts.columns:
        assert t.percent[col].iloc[:-1].sum() == pytest.approx(100.0)
        assert t.counts[col].iloc[:-1].sum() == t.counts.loc["Total", col]
    assert t.to_csv().splitlines()[0] == "group,algorithm,count,percent"


def test_empty_distribution():
    t = winner_distribution([])
    assert int(t.counts.values.sum()) == 0 and float(t.percent.values.sum()) == 0.0


def test_unknown_instance():
    with pytest.raises(KeyError):
        winner_distribution([WinnerLabel("nobody", AlgorithmId.NS, 0)], {"somebody": "Goto"})
    t = winner_distribution([WinnerLabel("a", AlgorithmId.NS, 0)], {"a": "Goto"})
    assert t.counts.loc["NS", "Goto"] == 1


# evaluation


def _data(y):
    return Dataset([str(i) for i in range(len(y))], np.arange(len(y) * 21, dtype=float).reshape(-1, 21), y)


def test_evaluate_rows():
    test = _data(np.array([5, 5, 3, 5]))
    oracle = fit_decision_tree(test)
    rows = evaluate([oracle, constant_model("SSP")], test, [5, 5, 3])
    assert [r.family for r in rows] == [BASELINE, "decision_tree", "constant"]
    assert rows[0].accuracy == 0.75 and rows[0].hyperparameters == {"label": "NS"}
    assert rows[1].accuracy == 1.0 and rows[1].baseline_accuracy == 0.75
    assert rows[2].accuracy == 0.25
    assert evaluate([], test, [3, 5])[0].hyperparameters == {"label": "SSP"}  # ties go to the lower code
    with pytest.raises(ValueError):
        evaluate([], _data(np.array([], dtype=int)), [5])


# configuration and the pipeline


def tiny_config(out, **over):
    cfg = {
        "output_dir": str(out),
        "seed": 3,
        "repetitions": 1,
        "generators": {"Goto": {"max_vertices": 64, "combinations": 12, "replicates": 2},
                       "Gridgraph": {"max_vertices": 30, "combinations": 10, "replicates": 2}},
        "timeout": {"factor": 100, "floor_ns": 1_000_000_000, "policy": "lose"},
        "folds": 2,
        "families": ["knn", "decision_tree"],
        "grids": {"knn": {"n_neighbors": [1, 3], "weights": ["uniform"]},
                  "decision_tree": {"max_depth": [None], "criterion": ["gini"], "splitter": ["best"], "class_weight": [None]}},
    }
    cfg.update(over)
    return cfg


@pytest.mark.parametrize(
    "patch, match",
    [
        ({"repetitions": 0}, "repetitions"),
        ({"output_dir": ""}, "output_dir"),
        ({"test_fraction": 1.5}, "test_fraction"),
        ({"families": ["svm"]}, "family"),
        ({"bogus": 1}, "unknown config"),
        ({"timeout": {"policy": "never"}}, "policy"),
        ({"generators": {}}, "generators"),
    ],
)
def test_config_validation(tmp_path, patch, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig.from_dict(tiny_config(tmp_path / "o", **patch))


def test_run_experiment(tmp_path):
    out = tmp_path / "exp"
    res = run_experiment(tiny_config(out))
    for name in ("timings.csv", "labels.csv", "features.csv", "report.csv", "split.csv",
                 "winner_distribution.csv", "excluded.csv", "config.json", "corpus/manifest.tsv",
                 "models/knn.json", "models/decision_tree.json", "models/knn_cv.csv"):
        assert (out / name).exists(), name
    assert [r.family for r in res.report] == [BASELINE, "knn", "decision_tree"]
    split = harness.read_split(out / "split.csv")
    assert set(split.values()) == {"train", "test"}
    assert len(split) == len(res.labels)
    assert len(res.labels) + len(res.excluded) == 44
    with pytest.raises(ConfigError, match="not empty"):
        run_experiment(tiny_config(out))


def test_stage_errors_are_tagged(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(harness, "stage_features", boom)
    out = tmp_path / "exp"
    with pytest.raises(StageError) as err:
        run_experiment(tiny_config(out))
    assert err.value.stage == "featurize" and "disk on fire" in str(err.value)
    assert (out / "labels.csv").exists() and not (out / "report.csv").exists()


def test_config_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(tiny_config(tmp_path / "o")))
    cfg = ExperimentConfig.load(path)
    assert cfg.timeout.policy == "lose" and cfg.repetitions == 1
    path.write_text("{")
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)
