# A complete (tiny) selection experiment: generate, time, label, train, evaluate.
#
# The desk-scale version is configs/desk.json; this one finishes in about a minute.

import json
import sys
import tempfile
from pathlib import Path

from mcfselect.harness import run_experiment

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp()) / "tiny"
config = {
    "output_dir": str(out),
    "seed": 11,
    "repetitions": 3,
    "generators": {
        "Netgen": {"max_vertices": 128, "combinations": 30, "replicates": 2},
        "Gridgen": {"max_vertices": 128, "combinations": 30, "replicates": 2},
        "Goto": {"max_vertices": 128, "replicates": 2},
    },
    "timeout": {"factor": 100, "floor_ns": 1_000_000_000, "policy": "lose"},
    "folds": 3,
    "families": ["knn", "decision_tree", "random_forest"],
    "grids": {
        "knn": {"n_neighbors": [3, 5, 9], "weights": ["uniform", "distance"]},
        "random_forest": {"n_estimators": [10, 50], "criterion": ["gini"], "max_depth": [None, 5],
                          "class_weight": [None]},
    },
}

res = run_experiment(config, progress=lambda msg: print(" ", msg))

# %% who won how often
print(res.distribution.counts)

# %% held-out accuracy against always picking the most frequent winner
for row in res.report:
    print(f"{row.family:22s} {row.accuracy:.3f}  {json.dumps(row.hyperparameters)}")
print("artifacts in", res.output_dir)
