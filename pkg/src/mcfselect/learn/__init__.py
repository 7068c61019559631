"""Datasets, splits, classifiers and grid search for solver selection."""
from .data import (
    Dataset,
    LabeledSample,
    accuracy,
    as_dataset,
    child_seed,
    kfold_indices,
    split_indices,
    split_sizes,
    train_test_split,
)
from .models import (
    ARTIFACT_VERSION,
    ArtifactError,
    ModelArtifact,
    constant_model,
    fit_adaboost,
    fit_decision_tree,
    fit_knn,
    fit_random_forest,
    knn_neighbors,
    member_votes,
    predict,
    predict_batch,
)
from .search import DEFAULT_GRIDS, GridSearchResult, fit_family, grid_cells, grid_search, load_grids
