from .binning import BinMapper
from .boosting import (
    ENSEMBLE_SCHEMA_VERSION,
    TrainConfig,
    TreeEnsemble,
    compute_class_weights,
    deserialize,
    explain,
    feature_importance,
    margin_to_probability,
    predict_margin,
    predict_proba,
    sample_weights_for,
    serialize,
    train,
    weighted_logloss,
)
from .tree import LEAF, Split, Tree, best_split, fill_expected

__all__ = [
    "ENSEMBLE_SCHEMA_VERSION",
    "LEAF",
    "BinMapper",
    "Split",
    "TrainConfig",
    "Tree",
    "TreeEnsemble",
    "best_split",
    "compute_class_weights",
    "deserialize",
    "explain",
    "feature_importance",
    "fill_expected",
    "margin_to_probability",
    "predict_margin",
    "predict_proba",
    "sample_weights_for",
    "serialize",
    "train",
    "weighted_logloss",
]
