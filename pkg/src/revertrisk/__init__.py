"""Revert-risk scoring for wiki revisions."""
from .bundle import ModelBundle, load_bundle, save_bundle
from .config import PipelineConfig, load_config
from .errors import DataError, RevertRiskError
from .records import RevisionRecord, UserKind

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "ModelBundle",
    "PipelineConfig",
    "RevertRiskError",
    "RevisionRecord",
    "UserKind",
    "load_bundle",
    "load_config",
    "save_bundle",
]
