from .hashing import CHANNELS, feature_dim, featurize_text, featurize_units
from .pooling import (
    MISSING,
    POOLED_CHANNELS,
    POOLED_FEATURE_NAMES,
    PooledChannel,
    PooledTextFeatures,
    assemble_pooled,
    assemble_pooled_batch,
    pool,
)
from .scorers import (
    ChannelScore,
    LinearTextScorer,
    RemoteScorer,
    ScorerParams,
    build_title_targets,
    channel_training_set,
    load_scorer,
    logistic,
    save_scorer,
    scorer_from_bytes,
    train_scorer,
    train_title_regressor,
)

__all__ = [
    "CHANNELS",
    "MISSING",
    "POOLED_CHANNELS",
    "POOLED_FEATURE_NAMES",
    "ChannelScore",
    "LinearTextScorer",
    "PooledChannel",
    "PooledTextFeatures",
    "RemoteScorer",
    "ScorerParams",
    "assemble_pooled",
    "assemble_pooled_batch",
    "build_title_targets",
    "channel_training_set",
    "feature_dim",
    "featurize_text",
    "featurize_units",
    "load_scorer",
    "logistic",
    "pool",
    "save_scorer",
    "scorer_from_bytes",
    "train_scorer",
    "train_title_regressor",
]
