"""Logistic-loss gradient boosting over histogram trees."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from ..errors import LoadError, PredictionError, TrainingError, VersionError, WeightingError
from .binning import BinMapper
from .tree import LEAF, Tree, grow_tree

ENSEMBLE_SCHEMA_VERSION = 1
# margins are clipped before the logistic so probabilities stay strictly inside (0, 1)
MARGIN_CLIP = 30.0


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    n_trees: int = 200
    max_depth: int = 6
    min_child_weight: float = 1.0
    l2_lambda: float = 1.0
    n_bins: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.n_bins < 2 or self.n_bins > 65534:
            raise ValueError("n_bins must be in [2, 65534]")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_child_weight < 0 or self.l2_lambda < 0:
            raise ValueError("min_child_weight and l2_lambda must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


@dataclass
class TreeEnsemble:
    trees: list[Tree]
    base_margin: float
    learning_rate: float
    feature_names: list[str]
    trained_config: TrainConfig = field(default_factory=TrainConfig)
    train_loss: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check_row(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.n_features:
            raise PredictionError(f"expected {self.n_features} features, got shape {x.shape}")
        return x

    def _check_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise PredictionError(f"expected (n, {self.n_features}) matrix, got shape {X.shape}")
        return X


def compute_class_weights(labels: Sequence) -> tuple[float, float]:
    """(w_pos, w_neg) with negatives at weight 1 and positives scaled up to balance."""
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise WeightingError(f"class weighting needs both classes (pos={n_pos}, neg={n_neg})")
    return n_neg / n_pos, 1.0


def sample_weights_for(labels: Sequence, w_pos: float, w_neg: float) -> np.ndarray:
    y = np.asarray(labels).astype(bool)
    return np.where(y, w_pos, w_neg).astype(np.float64)


def weighted_logloss(margin: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    # log(1 + e^-m) for positives, log(1 + e^m) for negatives
    losses = np.logaddexp(0.0, np.where(y > 0.5, -margin, margin))
    return float(np.dot(w, losses) / w.sum())


def train(
    X,
    y,
    sample_weight=None,
    config: TrainConfig | None = None,
    feature_names: Sequence[str] | None = None,
) -> TreeEnsemble:
    """Fit a boosted ensemble. NaN entries in X are treated as missing."""
    config = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise TrainingError(f"feature matrix {X.shape} does not match labels {y.shape}")
    if X.shape[0] < 2:
        raise TrainingError("need at least 2 samples")
    if np.isinf(X).any():
        raise TrainingError("feature matrix contains infinite values")
    if not np.isin(y, (0.0, 1.0)).all():
        raise TrainingError("labels must be 0/1")
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")
    w = np.ones_like(y) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if w.shape != y.shape or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise TrainingError("sample weights must be positive, finite and match the labels")
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise TrainingError(f"{len(names)} feature names for {X.shape[1]} features")

    p0 = float(np.dot(w, y) / w.sum())
    base = math.log(p0 / (1.0 - p0))
    mapper = BinMapper.fit(X, config.n_bins)
    binned = mapper.transform(X)

    margin = np.full(y.shape, base)
    trees: list[Tree] = []
    losses = [weighted_logloss(margin, y, w)]
    for _ in range(config.n_trees):
        p = expit(margin)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        tree, update = grow_tree(
            binned, g, h, mapper,
            learning_rate=config.learning_rate,
            max_depth=config.max_depth,
            min_child_weight=config.min_child_weight,
            l2_lambda=config.l2_lambda,
        )
        trees.append(tree)
        margin = margin + update
        losses.append(weighted_logloss(margin, y, w))
    return TreeEnsemble(trees, base, config.learning_rate, names, config, losses)


def predict_margin(ensemble: TreeEnsemble, x):
    """Margin for one row (returns float) or a matrix (returns array)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        row = ensemble._check_row(arr).tolist()
        m = ensemble.base_margin
        for tree in ensemble.trees:
            m += float(tree.value[tree.leaf_for_row(row)])
        return m
    X = ensemble._check_matrix(arr)
    m = np.full(X.shape[0], ensemble.base_margin)
    for tree in ensemble.trees:
        m += tree.value[tree.apply(X)]
    return m


def margin_to_probability(m):
    return expit(np.clip(m, -MARGIN_CLIP, MARGIN_CLIP))


def predict_proba(ensemble: TreeEnsemble, x):
    m = predict_margin(ensemble, x)
    if isinstance(m, float):
        return float(margin_to_probability(m))
    return margin_to_probability(m)


def feature_importance(ensemble: TreeEnsemble) -> dict[str, float]:
    totals = np.zeros(ensemble.n_features)
    for tree in ensemble.trees:
        internal = tree.feature != LEAF
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    s = totals.sum()
    if s > 0:
        totals = totals / s
    return {name: float(v) for name, v in zip(ensemble.feature_names, totals)}


def explain(ensemble: TreeEnsemble, x) -> tuple[float, dict[str, float]]:
    """Decision-path attribution.

    Each split on the path credits its feature with the change in expected
    value between the node and the child taken, so the base plus all
    contributions telescopes to the margin.
    """
    row = ensemble._check_row(x).tolist()
    base = ensemble.base_margin
    contributions: dict[str, float] = {}
    for tree in ensemble.trees:
        base += float(tree.expected[0])
        i = 0
        while tree.feature[i] != LEAF:
            nxt = tree.next_node(i, row)
            name = ensemble.feature_names[tree.feature[i]]
            contributions[name] = contributions.get(name, 0.0) + float(tree.expected[nxt] - tree.expected[i])
            i = nxt
    return base, contributions


def serialize(ensemble: TreeEnsemble) -> bytes:
    doc = {
        "schema_version": ENSEMBLE_SCHEMA_VERSION,
        "kind": "gbdt-ensemble",
        "base_margin": ensemble.base_margin,
        "learning_rate": ensemble.learning_rate,
        "feature_names": list(ensemble.feature_names),
        "trained_config": ensemble.trained_config.to_dict(),
        "train_loss": list(ensemble.train_loss),
        "trees": [t.to_dict() for t in ensemble.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def deserialize(blob: bytes) -> TreeEnsemble:
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise LoadError(f"corrupt ensemble file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("kind") != "gbdt-ensemble":
        raise LoadError("not an ensemble file")
    if doc.get("schema_version") != ENSEMBLE_SCHEMA_VERSION:
        raise VersionError(doc.get("schema_version"), [ENSEMBLE_SCHEMA_VERSION])
    try:
        names = [str(n) for n in doc["feature_names"]]
        trees = [Tree.from_dict(t) for t in doc["trees"]]
        for t in trees:
            t.validate(len(names))
        return TreeEnsemble(
            trees=trees,
            base_margin=float(doc["base_margin"]),
            learning_rate=float(doc["learning_rate"]),
            feature_names=names,
            trained_config=TrainConfig.from_dict(doc.get("trained_config", {})),
            train_loss=[float(v) for v in doc.get("train_loss", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"malformed ensemble file: {exc}") from exc
