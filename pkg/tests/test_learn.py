import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcfselect.learn import (
    DEFAULT_GRIDS,
    ArtifactError,
    Dataset,
    LabeledSample,
    ModelArtifact,
    accuracy,
    constant_model,
    fit_adaboost,
    fit_decision_tree,
    fit_knn,
    fit_random_forest,
    grid_cells,
    grid_search,
    kfold_indices,
    knn_neighbors,
    load_grids,
    member_votes,
    predict,
    predict_batch,
    split_sizes,
    train_test_split,
)
from mcfselect.learn.models import tree_depth
from mcfselect.solvers import AlgorithmId


def dataset(X, y):
    X = np.asarray(X, float)
    if X.shape[1] < 21:
        X = np.hstack([X, np.zeros((len(X), 21 - X.shape[1]))])
    return Dataset([f"s{i}" for i in range(len(y))], X, np.asarray(y))


def random_data(rng, n=300, classes=4):
    X = rng.normal(size=(n, 21)) * rng.uniform(0.1, 1000, 21)
    y = rng.integers(0, classes, n)
    return Dataset([f"s{i}" for i in range(n)], X, y)


def structured_data(rng, n=400):
    X = rng.uniform(0, 10, (n, 21))
    y = np.where(X[:, 0] + X[:, 3] > 10, 5, np.where(X[:, 1] > 7, 3, 6))
    return Dataset([f"s{i}" for i in range(n)], X, y)


# splits and folds


def test_paper_split_sizes():
    assert split_sizes(73130, 0.2) == (58504, 14626)
    assert split_sizes(10, 0.2) == (8, 2)


@settings(max_examples=200)
@given(st.integers(1, 5000), st.floats(0.01, 0.99), st.integers(0, 2**31))
def test_split_partition(n, frac, seed):
    items = list(range(n))
    tr, te = train_test_split(items, frac, seed)
    assert sorted(tr + te) == items and not set(tr) & set(te)
    assert abs(len(te) - n * frac) <= 0.5 + 1e-9
    assert (tr, te) == train_test_split(items, frac, seed)


def test_split_errors():
    with pytest.raises(ValueError):
        train_test_split([], 0.2, 0)
    with pytest.raises(ValueError):
        split_sizes(10, 1.0)


def test_kfold_examples():
    assert sorted(len(f) for f in kfold_indices(10, 5, 0)) == [2] * 5
    assert sorted(len(f) for f in kfold_indices(11, 5, 0)) == [2, 2, 2, 2, 3]
    with pytest.raises(ValueError):
        kfold_indices(3, 5, 0)


@settings(max_examples=200)
@given(st.integers(1, 2000), st.integers(1, 20), st.integers(0, 2**31))
def test_kfold_partition(n, k, seed):
    k = min(k, n)
    folds = kfold_indices(n, k, seed)
    assert len(folds) == k
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_accuracy():
    assert accuracy([5, 5], [5, 5]) == 1
    assert accuracy([5, 5], [3, 3]) == 0
    assert accuracy([5, 3, 5], [5, 5, 5]) == Fraction(2, 3)
    assert accuracy([5] * 73130, [5] * 55006 + [3] * 18124) == Fraction(55006, 73130)
    assert round(float(Fraction(55006, 73130)), 4) == 0.7522
    with pytest.raises(ValueError):
        accuracy([], [])
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])


# grids


def test_grid_cell_counts():
    counts = {fam: len(grid_cells(g)) for fam, g in DEFAULT_GRIDS.items()}
    assert counts == {"knn": 12, "decision_tree": 32, "random_forest": 64, "adaboost": 30}
    assert DEFAULT_GRIDS["knn"]["n_neighbors"] == [8, 10, 20, 50, 70, 90]
    assert DEFAULT_GRIDS["random_forest"]["n_estimators"] == [10, 50, 100, 200]


def test_grid_override(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"knn": {"n_neighbors": [1], "weights": ["uniform"]}}))
    grids = load_grids(str(path))
    assert len(grid_cells(grids["knn"])) == 1 and len(grid_cells(grids["adaboost"])) == 30


def test_separable_knn_grid_picks_first_cell(rng):
    X = np.vstack([rng.normal(0, 0.1, (100, 21)), rng.normal(20, 0.1, (100, 21))])
    y = np.array([5] * 100 + [3] * 100)
    res = grid_search(Dataset([str(i) for i in range(200)], X, y), "knn", k=5, seed=1)
    assert all(c.mean == 1.0 for c in res.cells)
    assert res.best_index == 0 and res.best_params == grid_cells(DEFAULT_GRIDS["knn"])[0]


def test_grid_search_winner_dominates(rng):
    data = structured_data(rng, 200)
    res = grid_search(data, "decision_tree", k=5, seed=3)
    assert all(res.best_mean >= c.mean for c in res.cells)
    assert len(res.cells) == 32
    header = res.report_csv().splitlines()[0].split(",")
    assert header[0] == "cell_id" and header[-1] == "mean"


def test_grid_cells_depend_only_on_seed_cell_and_fold(rng):
    from mcfselect.learn import child_seed, fit_family

    data = structured_data(rng, 150)
    grid = {"n_estimators": [10], "criterion": ["gini", "entropy"], "max_depth": [None, 3], "class_weight": [None]}
    res = grid_search(data, "random_forest", grid, 3, 9)
    assert [c.fold_accuracy for c in res.cells] == [c.fold_accuracy for c in grid_search(data, "random_forest", grid, 3, 9).cells]
    folds = kfold_indices(len(data), 3, 9)
    cell = 2
    for fi, val in enumerate(folds):
        tr = np.setdiff1d(np.arange(len(data)), val)
        model = fit_family("random_forest", data.subset(tr), res.cells[cell].params, child_seed(9, cell, fi))
        assert res.cells[cell].fold_accuracy[fi] == np.mean(predict_batch(model, data.X[val]) == data.y[val])


# kNN


def test_knn_examples():
    X = [[0.0], [1.0], [2.0], [10.0]]
    data = dataset(X, [5, 5, 3, 3])
    m1 = fit_knn(data, 1)
    assert list(predict_batch(m1, data.X)) == [5, 5, 3, 3]
    three = dataset([[0.0], [1.0], [2.0], [50.0]], [5, 5, 3, 3])
    m3 = fit_knn(three, 3, "uniform")
    assert predict(m3, [0.5] + [0] * 20) is AlgorithmId.NS
    # distance weights 1/d: SSP at distance 1 beats NS at distance 3
    two = dataset([[1.0], [-3.0], [100.0]], [3, 5, 6])
    m2 = fit_knn(two, 2, "distance")
    q = np.zeros(21)
    assert list(knn_neighbors(m2, q)) == [0, 1]
    assert predict(m2, q) is AlgorithmId.SSP
    with pytest.raises(ValueError):
        fit_knn(data, 5)


def test_knn_standardization(rng):
    data = random_data(rng)
    Z = fit_knn(data, 5).parameters["X"]
    assert np.allclose(Z.mean(0), 0, atol=1e-9) and np.allclose(Z.std(0), 1, atol=1e-9)


def test_knn_matches_brute_force(rng):
    data = random_data(rng, 120)
    model = fit_knn(data, 7, "distance")
    Q = rng.normal(size=(30, 21)) * 300
    mean, sd = data.X.mean(0), data.X.std(0)
    Z, Qz = (data.X - mean) / sd, (Q - mean) / sd
    for q, got in zip(Qz, predict_batch(model, Q)):
        d = np.sqrt(((Z - q) ** 2).sum(1))
        nb = np.argsort(d, kind="stable")[:7]
        score = np.zeros(7)
        for i in nb:
            score[data.y[i]] += 1 / d[i]
        assert got == np.argmax(score)


# trees


def test_single_class_tree():
    m = fit_decision_tree(dataset([[1.0], [2.0]], [5, 5]))
    assert tree_depth(m.parameters["tree"]) == 0
    assert predict(m, np.arange(21.0)) is AlgorithmId.NS


def test_xor():
    X = [[0, 0], [0, 1], [1, 0], [1, 1]]
    data = dataset(X, [3, 5, 5, 3])
    stump = fit_decision_tree(data, max_depth=1)
    assert accuracy(predict_batch(stump, data.X), data.y) <= Fraction(3, 4)
    deep = fit_decision_tree(data, splitter="best", max_depth=2)
    assert accuracy(predict_batch(deep, data.X), data.y) == 1


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.sampled_from(["gini", "entropy"]), st.sampled_from(["best", "random"]))
def test_unlimited_tree_memorizes(seed, crit, splitter):
    rng = np.random.default_rng(seed)
    data = random_data(rng, 200, 7)
    data.X[:, 0] = np.arange(200) % 17  # ties in some columns
    m = fit_decision_tree(data, crit, splitter, None, None, seed)
    assert accuracy(predict_batch(m, data.X), data.y) == 1


def test_max_depth_respected(rng):
    data = random_data(rng)
    for d in (1, 3, 5):
        assert tree_depth(fit_decision_tree(data, max_depth=d).parameters["tree"]) <= d


def test_balanced_weights_change_leaves(rng):
    X = rng.normal(size=(100, 21))
    y = np.array([5] * 90 + [3] * 10)
    data = Dataset([str(i) for i in range(100)], X, y)
    plain = fit_decision_tree(data, max_depth=0)
    bal = fit_decision_tree(data, max_depth=0, class_weight="balanced")
    assert predict(plain, X[0]) is AlgorithmId.NS
    v = bal.parameters["tree"]["value"][0]
    assert v[5] == pytest.approx(v[3])


# forest


def test_forest_vote_is_member_mode(rng):
    data = structured_data(rng, 300)
    forest = fit_random_forest(data, 15, seed=2)
    Q = rng.uniform(0, 10, (1000, 21))
    votes = member_votes(forest, Q)
    mode = np.array([np.argmax(np.bincount(col, minlength=7)) for col in votes.T])
    assert np.array_equal(predict_batch(forest, Q), mode)


def test_single_tree_forest(rng):
    data = structured_data(rng, 200)
    forest = fit_random_forest(data, 1, seed=4)
    Q = rng.uniform(0, 10, (200, 21))
    assert np.array_equal(predict_batch(forest, Q), member_votes(forest, Q)[0])


def test_forest_determinism(rng):
    data = structured_data(rng, 200)
    a, b = fit_random_forest(data, 5, seed=8), fit_random_forest(data, 5, seed=8)
    assert a.to_json() == b.to_json()
    assert a.to_json() != fit_random_forest(data, 5, seed=9).to_json()


# boosting


def test_adaboost_single_estimator_is_stump(rng):
    data = structured_data(rng, 200)
    one = fit_adaboost(data, 1, 0.37)
    stump = fit_decision_tree(data, "gini", "best", 1)
    Q = rng.uniform(0, 10, (100, 21))
    assert np.array_equal(predict_batch(one, Q), predict_batch(stump, Q))


def test_adaboost_stops_on_perfect_stump():
    data = dataset([[0.0], [1.0], [5.0], [6.0]], [3, 3, 5, 5])
    m = fit_adaboost(data, 50)
    assert len(m.parameters["stumps"]) == 1


def test_adaboost_weights_normalized(rng):
    m = fit_adaboost(structured_data(rng, 300), 20)
    assert m.metadata["weight_sums"]
    assert all(abs(s - 1.0) <= 1e-12 for s in m.metadata["weight_sums"])


def test_adaboost_needs_two_classes():
    with pytest.raises(ValueError):
        fit_adaboost(dataset([[0.0], [1.0]], [5, 5]))


# artifacts


@pytest.mark.parametrize("family", ["knn", "decision_tree", "random_forest", "adaboost", "constant"])
def test_artifact_round_trip(family, rng, tmp_path):
    data = structured_data(rng, 200)
    model = {
        "knn": lambda: fit_knn(data, 5, "distance"),
        "decision_tree": lambda: fit_decision_tree(data, "entropy", "random", 8, "balanced", 3),
        "random_forest": lambda: fit_random_forest(data, 7, "gini", None, None, 3),
        "adaboost": lambda: fit_adaboost(data, 9, 0.85, 3),
        "constant": lambda: constant_model("NS"),
    }[family]()
    model.save(tmp_path / "m.json")
    back = ModelArtifact.load(tmp_path / "m.json")
    Q = rng.uniform(0, 10, (100, 21))
    assert np.array_equal(predict_batch(model, Q), predict_batch(back, Q))
    assert back.feature_names == model.feature_names and len(back.feature_names) == 21
    assert json.loads(back.to_json())["version"] == 1


def test_artifact_errors(tmp_path):
    good = json.loads(constant_model("NS").to_json())
    for doc in ("nonsense", json.dumps({**good, "version": 99}), json.dumps({"family": "knn"})):
        with pytest.raises(ArtifactError):
            ModelArtifact.from_json(doc)
    with pytest.raises(ValueError):
        predict_batch(constant_model("NS"), np.zeros((1, 20)))


def test_labeled_samples_convert():
    from mcfselect.features import FeatureVector

    fv = FeatureVector(*range(21))
    ds = Dataset.from_samples([LabeledSample("a", fv, AlgorithmId.NS), LabeledSample("b", fv, AlgorithmId.SSP)])
    assert list(ds.y) == [5, 3] and ds.X.shape == (2, 21)
