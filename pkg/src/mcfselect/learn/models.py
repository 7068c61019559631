"""kNN, decision tree, random forest and SAMME AdaBoost, plus artifact (de)serialization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..features import FEATURE_NAMES, NUM_FEATURES
from ..solvers import AlgorithmId
from .data import Dataset, as_dataset, child_seed
from .tree import BEST, ENTROPY, GINI, RANDOM, apply_tree, build_tree

ARTIFACT_VERSION = 1
NUM_CLASSES = len(AlgorithmId)
FAMILIES = ("knn", "decision_tree", "random_forest", "adaboost", "constant")
# floor(sqrt(21)) features examined per forest split
FOREST_MAX_FEATURES = 4


class ArtifactError(ValueError):
    pass


@dataclass
class ModelArtifact:
    family: str
    hyperparameters: dict
    parameters: dict
    feature_names: list = field(default_factory=lambda: list(FEATURE_NAMES))
    metadata: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return predict_batch(self, X)

    def to_json(self) -> str:
        doc = {
            "version": ARTIFACT_VERSION,
            "family": self.family,
            "hyperparameters": self.hyperparameters,
            "feature_names": self.feature_names,
            "metadata": self.metadata,
            "parameters": _encode(self.parameters),
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelArtifact":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ArtifactError(f"model artifact is not valid JSON: {e}") from None
        if not isinstance(doc, dict) or "version" not in doc:
            raise ArtifactError("model artifact has no version field")
        if doc["version"] != ARTIFACT_VERSION:
            raise ArtifactError(f"unsupported artifact version {doc['version']!r} (expected {ARTIFACT_VERSION})")
        try:
            if doc["family"] not in FAMILIES:
                raise ArtifactError(f"unknown model family {doc['family']!r}")
            return cls(
                doc["family"], doc["hyperparameters"], _decode(doc["parameters"]), doc["feature_names"], doc["metadata"]
            )
        except KeyError as e:
            raise ArtifactError(f"model artifact lacks field {e}") from None

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ModelArtifact":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.dtype.str, "shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["data"], dtype=np.dtype(obj["__array__"])).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def _metadata(data: Dataset, seed) -> dict:
    return {"seed": seed, "dataset": data.digest(), "num_samples": len(data)}


def _argmax_rows(scores: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest AlgorithmId code
    return np.argmax(scores, axis=1).astype(np.int64)


def _class_weights(y: np.ndarray, mode) -> np.ndarray:
    w = np.ones(NUM_CLASSES)
    if mode in (None, "none", "off", False):
        return w
    if mode != "balanced":
        raise ValueError(f"unknown class_weight {mode!r}")
    counts = np.bincount(y, minlength=NUM_CLASSES)
    present = np.count_nonzero(counts)
    w[counts > 0] = len(y) / (present * counts[counts > 0])
    return w


def _depth_arg(max_depth) -> int:
    if max_depth is None or (isinstance(max_depth, float) and math.isinf(max_depth)):
        return -1
    return int(max_depth)


def _criterion(name) -> int:
    return {"gini": GINI, "entropy": ENTROPY}[name]


def _splitter(name) -> int:
    return {"best": BEST, "random": RANDOM}[name]


def _grow(X, y, w, criterion, splitter, max_depth, max_features, seed) -> dict:
    f, t, l, r, v = build_tree(
        np.ascontiguousarray(X, dtype=np.float64), y, np.asarray(w, dtype=np.float64), NUM_CLASSES,
        _criterion(criterion), _splitter(splitter), _depth_arg(max_depth), max_features, 2, seed,
    )
    return {"feature": f, "threshold": t, "left": l, "right": r, "value": v}


def _tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    leaves = apply_tree(tree["feature"], tree["threshold"], tree["left"], tree["right"], X)
    return _argmax_rows(tree["value"][leaves])


# kNN


def fit_knn(train, k: int = 20, weights: str = "uniform") -> ModelArtifact:
    data = as_dataset(train)
    if not 1 <= k <= len(data):
        raise ValueError(f"k={k} needs 1 <= k <= {len(data)} training samples")
    if weights not in ("uniform", "distance"):
        raise ValueError(f"unknown weights {weights!r}")
    mean = data.X.mean(axis=0)
    std = data.X.std(axis=0)
    std[std == 0] = 1.0
    params = {"X": (data.X - mean) / std, "y": data.y.copy(), "mean": mean, "scale": std}
    return ModelArtifact("knn", {"n_neighbors": int(k), "weights": weights}, params, metadata=_metadata(data, None))


def _knn_predict(model: ModelArtifact, X: np.ndarray) -> np.ndarray:
    p = model.parameters
    k = int(model.hyperparameters["n_neighbors"])
    distance = model.hyperparameters["weights"] == "distance"
    Z = (X - p["mean"]) / p["scale"]
    T = p["X"]
    out = np.empty(len(Z), np.int64)
    for lo in range(0, len(Z), 256):
        block = Z[lo : lo + 256]
        d2 = (block**2).sum(1)[:, None] - 2.0 * block @ T.T + (T**2).sum(1)[None, :]
        d = np.sqrt(np.maximum(d2, 0.0))
        # stable order: equal distances keep the lower training index
        nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
        for r, nb in enumerate(nearest):
            labels = p["y"][nb]
            if distance:
                dist = d[r, nb]
                exact = dist == 0
                wts = exact.astype(float) if exact.any() else 1.0 / dist
            else:
                wts = np.ones(k)
            out[lo + r] = int(np.argmax(np.bincount(labels, weights=wts, minlength=NUM_CLASSES)))
    return out


def knn_neighbors(model: ModelArtifact, x) -> np.ndarray:
    """Training indices of the k nearest neighbours of one input."""
    p = model.parameters
    z = (np.asarray(x, float) - p["mean"]) / p["scale"]
    d = np.sqrt(((p["X"] - z) ** 2).sum(1))
    return np.argsort(d, kind="stable")[: int(model.hyperparameters["n_neighbors"])]


# trees


def fit_decision_tree(
    train, criterion: str = "gini", splitter: str = "best", max_depth=None, class_weight=None, seed: int = 0
) -> ModelArtifact:
    data = as_dataset(train)
    if len(data) == 0:
        raise ValueError("empty training set")
    w = _class_weights(data.y, class_weight)[data.y]
    tree = _grow(data.X, data.y, w, criterion, splitter, max_depth, NUM_FEATURES, child_seed(seed, 0))
    hp = {"criterion": criterion, "splitter": splitter, "max_depth": max_depth, "class_weight": class_weight}
    return ModelArtifact("decision_tree", hp, {"tree": tree}, metadata=_metadata(data, seed))


def fit_random_forest(
    train, num_trees: int = 100, criterion: str = "gini", max_depth=None, class_weight=None, seed: int = 0
) -> ModelArtifact:
    """Bootstrap-aggregated trees, each split drawing from 4 random features."""
    data = as_dataset(train)
    if len(data) == 0:
        raise ValueError("empty training set")
    n = len(data)
    cw = _class_weights(data.y, class_weight)[data.y]
    trees, seeds = [], []
    for i in range(int(num_trees)):
        s = child_seed(seed, 1, i)
        rng = np.random.default_rng(s)
        counts = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
        trees.append(_grow(data.X, data.y, counts * cw, criterion, "best", max_depth, FOREST_MAX_FEATURES, s))
        seeds.append(s)
    hp = {"n_estimators": int(num_trees), "criterion": criterion, "max_depth": max_depth, "class_weight": class_weight}
    return ModelArtifact("random_forest", hp, {"trees": trees, "tree_seeds": seeds}, metadata=_metadata(data, seed))


def member_votes(model: ModelArtifact, X) -> np.ndarray:
    """``(num_trees, len(X))`` predictions of every forest member."""
    X = _check_X(model, X)
    return np.array([_tree_predict(t, X) for t in model.parameters["trees"]]).reshape(-1, len(X))


def _forest_predict(model: ModelArtifact, X: np.ndarray) -> np.ndarray:
    votes = np.array([_tree_predict(t, X) for t in model.parameters["trees"]])
    tally = np.zeros((len(X), NUM_CLASSES))
    for row in votes:
        tally[np.arange(len(X)), row] += 1
    return _argmax_rows(tally)


# boosting


def fit_adaboost(train, num_estimators: int = 50, learning_rate: float = 1.0, seed: int = 0) -> ModelArtifact:
    """Multi-class SAMME boosting of depth-1 trees."""
    data = as_dataset(train)
    classes = np.unique(data.y)
    if len(classes) < 2:
        raise ValueError("boosting needs at least two classes")
    K = len(classes)
    n = len(data)
    w = np.full(n, 1.0 / n)
    stumps, alphas, history = [], [], []
    for m in range(int(num_estimators)):
        stump = _grow(data.X, data.y, w, "gini", "best", 1, NUM_FEATURES, child_seed(seed, 2, m))
        miss = _tree_predict(stump, data.X) != data.y
        err = float(np.dot(w, miss) / w.sum())
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(1.0)
            break
        if err >= 1.0 - 1.0 / K:
            if not stumps:
                stumps.append(stump)
                alphas.append(1.0)
            break
        alpha = float(learning_rate) * (math.log((1.0 - err) / err) + math.log(K - 1.0))
        stumps.append(stump)
        alphas.append(alpha)
        if m == num_estimators - 1:
            break
        w = w * np.exp(alpha * miss)
        w /= w.sum()
        history.append(float(w.sum()))
    hp = {"n_estimators": int(num_estimators), "learning_rate": float(learning_rate)}
    params = {"stumps": stumps, "alphas": alphas}
    meta = _metadata(data, seed) | {"weight_sums": history}
    return ModelArtifact("adaboost", hp, params, metadata=meta)


def _boost_predict(model: ModelArtifact, X: np.ndarray) -> np.ndarray:
    score = np.zeros((len(X), NUM_CLASSES))
    for stump, a in zip(model.parameters["stumps"], model.parameters["alphas"]):
        score[np.arange(len(X)), _tree_predict(stump, X)] += a
    return _argmax_rows(score)


def constant_model(label) -> ModelArtifact:
    """Always predicts ``label``; used for the single-best baseline."""
    return ModelArtifact("constant", {"label": AlgorithmId.parse(label).name}, {})


# prediction


def _check_X(model: ModelArtifact, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(model.feature_names):
        raise ValueError(f"expected {len(model.feature_names)} features, got {X.shape[1]}")
    return np.ascontiguousarray(X)


def predict_batch(model: ModelArtifact, X) -> np.ndarray:
    """AlgorithmId codes predicted for every row of ``X``."""
    X = _check_X(model, X)
    fam = model.family
    if fam == "knn":
        return _knn_predict(model, X)
    if fam == "decision_tree":
        return _tree_predict(model.parameters["tree"], X)
    if fam == "random_forest":
        return _forest_predict(model, X)
    if fam == "adaboost":
        return _boost_predict(model, X)
    if fam == "constant":
        return np.full(len(X), int(AlgorithmId.parse(model.hyperparameters["label"])), np.int64)
    raise ArtifactError(f"unknown model family {fam!r}")


def predict(model: ModelArtifact, features) -> AlgorithmId:
    x = np.asarray(list(features), dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    return AlgorithmId(int(predict_batch(model, x)[0]))


def tree_depth(tree: dict) -> int:
    depth = np.zeros(len(tree["feature"]), np.int64)
    for i in range(len(depth)):
        if tree["feature"][i] >= 0:
            depth[tree["left"][i]] = depth[tree["right"][i]] = depth[i] + 1
    return int(depth.max())
