"""Hyperparameter grids and k-fold cross-validated grid search."""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Dataset, as_dataset, child_seed, kfold_indices
from .models import ModelArtifact, fit_adaboost, fit_decision_tree, fit_knn, fit_random_forest, predict_batch

DEFAULT_GRIDS = {
    "knn": {"n_neighbors": [8, 10, 20, 50, 70, 90], "weights": ["uniform", "distance"]},
    "decision_tree": {
        "max_depth": [None, 3, 5, 8],
        "criterion": ["gini", "entropy"],
        "splitter": ["best", "random"],
        "class_weight": [None, "balanced"],
    },
    "random_forest": {
        "n_estimators": [10, 50, 100, 200],
        "criterion": ["gini", "entropy"],
        "max_depth": [None, 3, 5, 8],
        "class_weight": [None, "balanced"],
    },
    "adaboost": {"n_estimators": [5, 7, 9, 11, 13, 50], "learning_rate": [0.8, 0.85, 1, 1.15, 1.3]},
}


def grid_cells(grid: dict) -> list[dict]:
    """Cartesian product in grid order (first parameter varies slowest)."""
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[k] for k in names))]


def load_grids(path: Optional[str] = None) -> dict:
    """Default grids, overridden family by family from a JSON file."""
    grids = {k: dict(v) for k, v in DEFAULT_GRIDS.items()}
    if path:
        with open(path) as fh:
            override = json.load(fh)
        for fam, g in override.items():
            if fam not in grids:
                raise ValueError(f"unknown classifier family {fam!r}")
            grids[fam] = g
    return grids


def fit_family(family: str, train, params: dict, seed: int) -> ModelArtifact:
    if family == "knn":
        return fit_knn(train, params["n_neighbors"], params["weights"])
    if family == "decision_tree":
        return fit_decision_tree(
            train, params["criterion"], params["splitter"], params["max_depth"], params["class_weight"], seed
        )
    if family == "random_forest":
        return fit_random_forest(
            train, params["n_estimators"], params["criterion"], params["max_depth"], params["class_weight"], seed
        )
    if family == "adaboost":
        return fit_adaboost(train, params["n_estimators"], params["learning_rate"], seed)
    raise ValueError(f"unknown classifier family {family!r}")


@dataclass
class CellResult:
    index: int
    params: dict
    fold_accuracy: list
    mean: float


@dataclass
class GridSearchResult:
    family: str
    best_params: dict
    best_index: int
    cells: list

    @property
    def best_mean(self) -> float:
        return self.cells[self.best_index].mean

    def report_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        k = max((len(c.fold_accuracy) for c in self.cells), default=0)
        w.writerow(["cell_id", "family", "hyperparameters", *[f"fold_{i}" for i in range(k)], "mean"])
        for c in self.cells:
            folds = ["%.12g" % a for a in c.fold_accuracy]
            mean = "nan" if np.isnan(c.mean) else "%.12g" % c.mean
            w.writerow([c.index, self.family, json.dumps(c.params, sort_keys=True), *folds, mean])
        return buf.getvalue()


def grid_search(train, family: str, grid: Optional[dict] = None, k: int = 5, seed: int = 0) -> GridSearchResult:
    """Pick the cell with the best mean k-fold validation accuracy; ties go to the earliest cell.

    Every fit draws its randomness from ``(seed, cell, fold)``, so the result
    does not depend on evaluation order. Cells that cannot be fitted (kNN
    with more neighbours than training rows) score NaN and are never chosen.
    """
    data = as_dataset(train)
    grid = DEFAULT_GRIDS[family] if grid is None else grid
    if len(data) < k:
        raise ValueError(f"need at least k={k} training samples")
    folds = kfold_indices(len(data), k, seed)
    all_idx = np.arange(len(data))
    cells = []
    for ci, params in enumerate(grid_cells(grid)):
        accs = []
        for fi, val in enumerate(folds):
            tr = np.setdiff1d(all_idx, val, assume_unique=True)
            try:
                model = fit_family(family, data.subset(tr), params, child_seed(seed, ci, fi))
            except ValueError:
                accs = []
                break
            accs.append(float(np.mean(predict_batch(model, data.X[val]) == data.y[val])))
        mean = float(np.mean(accs)) if accs else float("nan")
        cells.append(CellResult(ci, params, accs, mean))
    scored = [c for c in cells if not np.isnan(c.mean)]
    if not scored:
        raise ValueError("no grid cell could be fitted")
    best = max(scored, key=lambda c: (c.mean, -c.index))
    return GridSearchResult(family, best.params, best.index, cells)
