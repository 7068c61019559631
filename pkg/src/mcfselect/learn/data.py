"""Labelled datasets, seeded splits and accuracy."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..features import NUM_FEATURES, FeatureVector
from ..solvers import AlgorithmId


@dataclass(frozen=True)
class LabeledSample:
    instance_id: str
    features: FeatureVector
    label: AlgorithmId
    timings: Optional[dict] = None


@dataclass
class Dataset:
    """Column form of a list of samples: ``X`` is ``(n, 21)`` float, ``y`` holds AlgorithmId codes."""

    ids: list
    X: np.ndarray
    y: np.ndarray
    groups: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, NUM_FEATURES)
        self.y = np.asarray(self.y, dtype=np.int64)
        if not (len(self.ids) == len(self.X) == len(self.y)):
            raise ValueError("ids, X and y must have equal length")

    def __len__(self):
        return len(self.y)

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample]) -> "Dataset":
        return cls(
            [s.instance_id for s in samples],
            np.array([list(s.features) for s in samples], dtype=np.float64),
            np.array([int(s.label) for s in samples], dtype=np.int64),
        )

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        groups = [self.groups[i] for i in idx] if self.groups else []
        return Dataset([self.ids[i] for i in idx], self.X[idx], self.y[idx], groups)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()[:16]


def as_dataset(data) -> Dataset:
    if isinstance(data, Dataset):
        return data
    return Dataset.from_samples(list(data))


def child_seed(seed: int, *keys: int) -> int:
    """A 32-bit seed derived from ``seed`` and integer keys, independent of call order."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def split_sizes(n: int, test_fraction: float) -> tuple[int, int]:
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    n_test = int(Fraction(n) * Fraction(test_fraction).limit_denominator(10**9) + Fraction(1, 2))
    return n - n_test, n_test


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise ValueError("empty dataset")
    n_train, _ = split_sizes(n, test_fraction)
    perm = np.random.default_rng(child_seed(seed, 0)).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def train_test_split(dataset, test_fraction: float, seed: int):
    """Seeded shuffle split; the test part holds round(n * test_fraction) items."""
    if isinstance(dataset, Dataset):
        tr, te = split_indices(len(dataset), test_fraction, seed)
        return dataset.subset(tr), dataset.subset(te)
    items = list(dataset)
    tr, te = split_indices(len(items), test_fraction, seed)
    return [items[i] for i in tr], [items[i] for i in te]


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """``k`` disjoint validation folds covering ``range(n)``, sizes within one of each other."""
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(child_seed(seed, 1)).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def accuracy(predictions, labels) -> Fraction:
    p = [int(x) for x in predictions]
    t = [int(x) for x in labels]
    if len(p) != len(t):
        raise ValueError("predictions and labels differ in length")
    if not p:
        raise ValueError("accuracy of an empty prediction list")
    return Fraction(sum(a == b for a, b in zip(p, t)), len(p))
