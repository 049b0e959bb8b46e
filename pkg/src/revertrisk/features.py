"""Feature layout and per-revision feature vectors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AssemblyError
from .records import INTERFACE_FLAGS, RevisionRecord
from .textdiff import ACTION_KEYS, DiffConfig, TextDelta, compute_action_counts, extract_delta
from .textscore import POOLED_FEATURE_NAMES, PooledTextFeatures, assemble_pooled_batch

MISSING = -1.0
METADATA_NAMES = ("revision_text_bytes_diff", "seconds_since_previous_revision", *INTERFACE_FLAGS)
DEFAULT_USER_GROUPS = ("sysop", "autoconfirmed")
UNKNOWN_LANGUAGE = "unknown"

NAMED_CONFIGS = {
    "basic": (False, False),
    "mlm": (True, False),
    "user": (False, True),
    "full": (True, True),
}


@dataclass(frozen=True)
class FeatureConfig:
    use_text_scores: bool = True
    use_user_features: bool = True
    languages: tuple[str, ...] = ()
    user_groups: tuple[str, ...] = DEFAULT_USER_GROUPS
    comment_length: bool = True

    def __post_init__(self):
        object.__setattr__(self, "languages", tuple(sorted(set(self.languages))))
        object.__setattr__(self, "user_groups", tuple(self.user_groups))
        if UNKNOWN_LANGUAGE in self.languages:
            raise ValueError(f"{UNKNOWN_LANGUAGE!r} is reserved for the unknown-language bucket")

    @classmethod
    def named(cls, name: str, languages: Sequence[str] = (), **kwargs) -> "FeatureConfig":
        try:
            text, user = NAMED_CONFIGS[name]
        except KeyError:
            raise ValueError(f"feature config must be one of {sorted(NAMED_CONFIGS)}, got {name!r}") from None
        return cls(text, user, tuple(languages), **kwargs)

    @property
    def name(self) -> str:
        for key, flags in NAMED_CONFIGS.items():
            if flags == (self.use_text_scores, self.use_user_features):
                return key
        raise AssertionError("unreachable")

    def user_block_names(self) -> tuple[str, ...]:
        return ("is_anonymous",) + tuple(f"user_group_{g}" for g in self.user_groups)

    def feature_names(self) -> list[str]:
        names = list(METADATA_NAMES)
        if self.comment_length:
            names.append("comment_length")
        names.extend(ACTION_KEYS)
        names.extend(f"lang_{lang}" for lang in self.languages)
        names.append(f"lang_{UNKNOWN_LANGUAGE}")
        if self.use_text_scores:
            names.extend(POOLED_FEATURE_NAMES)
        if self.use_user_features:
            names.extend(self.user_block_names())
        return names

    def to_dict(self) -> dict:
        return {
            "use_text_scores": self.use_text_scores,
            "use_user_features": self.use_user_features,
            "languages": list(self.languages),
            "user_groups": list(self.user_groups),
            "comment_length": self.comment_length,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureConfig":
        return cls(
            bool(d["use_text_scores"]),
            bool(d["use_user_features"]),
            tuple(d.get("languages", ())),
            tuple(d.get("user_groups", DEFAULT_USER_GROUPS)),
            bool(d.get("comment_length", True)),
        )


def _metadata(record: RevisionRecord, config: FeatureConfig) -> list[float]:
    seconds = record.seconds_since_previous_revision
    out = [float(record.revision_text_bytes_diff), MISSING if seconds is None else float(seconds)]
    out.extend(1.0 if flag else 0.0 for flag in record.interface_flags.values())
    if config.comment_length:
        out.append(float(len(record.event_comment or "")))
    return out


def _language(record: RevisionRecord, config: FeatureConfig) -> list[float]:
    onehot = [1.0 if record.wiki_db == lang else 0.0 for lang in config.languages]
    onehot.append(0.0 if record.wiki_db in config.languages else 1.0)
    return onehot


def _user(record: RevisionRecord, config: FeatureConfig) -> list[float]:
    out = [1.0 if record.is_anonymous else 0.0]
    groups = record.user_groups
    for g in config.user_groups:
        out.append(MISSING if groups is None else (1.0 if g in groups else 0.0))
    return out


def assemble_features(
    record: RevisionRecord,
    delta: TextDelta | None,
    pooled: PooledTextFeatures | None,
    config: FeatureConfig,
    action_counts=None,
    diff_config: DiffConfig | None = None,
) -> np.ndarray:
    """One feature vector laid out as ``config.feature_names()``."""
    if config.use_text_scores and pooled is None:
        raise AssemblyError("feature config uses text scores but no pooled features were given")
    if not config.use_text_scores and pooled is not None:
        raise AssemblyError("pooled features given but the feature config does not use text scores")
    if action_counts is None:
        if not record.has_texts:
            raise AssemblyError(f"revision {record.revision_id} has no texts for action counts")
        action_counts = compute_action_counts(record.parent_text, record.current_text, delta, diff_config)
    row = _metadata(record, config)
    row.extend(float(v) for v in action_counts.as_list())
    row.extend(_language(record, config))
    if pooled is not None:
        row.extend(pooled.to_list())
    if config.use_user_features:
        row.extend(_user(record, config))
    return np.asarray(row, dtype=np.float64)


@dataclass
class FeaturizedSet:
    records: list[RevisionRecord]
    X: np.ndarray
    deltas: list[TextDelta]
    feature_names: list[str] = field(default_factory=list)

    @property
    def labels(self) -> np.ndarray:
        return np.array([bool(r.is_reverted) for r in self.records])


def compute_deltas(records: Sequence[RevisionRecord], diff_config: DiffConfig | None = None) -> list[TextDelta]:
    out = []
    for r in records:
        if not r.has_texts:
            raise AssemblyError(f"revision {r.revision_id} has no texts")
        out.append(extract_delta(r.parent_text, r.current_text, diff_config))
    return out


def featurize(
    records: Sequence[RevisionRecord],
    config: FeatureConfig,
    scorers: Mapping[str, object] | None = None,
    diff_config: DiffConfig | None = None,
    deltas: Sequence[TextDelta] | None = None,
) -> FeaturizedSet:
    """Feature matrix for many revisions; scorers see each channel's units in one batch."""
    records = list(records)
    deltas = list(deltas) if deltas is not None else compute_deltas(records, diff_config)
    if len(deltas) != len(records):
        raise AssemblyError("deltas do not align with records")
    pooled: list = [None] * len(records)
    if config.use_text_scores:
        if scorers is None:
            raise AssemblyError("feature config uses text scores but no scorers were given")
        pooled = assemble_pooled_batch(scorers, deltas, [r.page_title for r in records])
    names = config.feature_names()
    X = np.empty((len(records), len(names)))
    for i, (r, d, p) in enumerate(zip(records, deltas, pooled)):
        X[i] = assemble_features(r, d, p, config, diff_config=diff_config)
    return FeaturizedSet(records, X, deltas, names)
