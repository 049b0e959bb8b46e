"""Per-channel text scorers.

``LinearTextScorer`` is a linear model over hashed character n-grams: logistic
regression for the change/insert/remove channels, ridge regression (clamped to
[0, 1]) for the title channel. ``RemoteScorer`` forwards units to an HTTP scoring service that
speaks the same contract, so a transformer-backed service can replace the
linear models without touching the rest of the pipeline.
"""
from __future__ import annotations

import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

import httpx
import numpy as np
from sklearn.linear_model import LogisticRegression, Ridge

from ..errors import LoadError, ScoringError, TrainingError, VersionError
from .hashing import CHANNELS, check_unit, feature_dim, featurize_units

SCORER_FORMAT_VERSION = 1
CLASSIFICATION_CHANNELS = ("change", "insert", "remove")


class ChannelScore(NamedTuple):
    raw: float
    probability: float


def logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class TextScorer(Protocol):
    channel: str
    kind: str

    def score(self, units: Sequence) -> list[ChannelScore]: ...


@dataclass
class ScorerParams:
    """``C`` is the inverse L2 strength of the logistic scorers; ``title_alpha`` the ridge penalty."""

    C: float = 4.0
    max_iter: int = 200
    title_alpha: float = 1.0
    hash_bits: int = 18
    ngram_range: tuple[int, int] = (1, 3)

    def __post_init__(self):
        self.ngram_range = tuple(self.ngram_range)
        if self.C <= 0 or self.title_alpha <= 0:
            raise ValueError("C and title_alpha must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class LinearTextScorer:
    channel: str
    weights: np.ndarray
    bias: float = 0.0
    hash_bits: int = 18
    ngram_range: tuple[int, int] = (1, 3)
    trained_on: str = "all"
    kind: str = field(default="ngram", init=False)

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.ngram_range = tuple(self.ngram_range)
        if self.weights.shape != (feature_dim(self.channel, self.hash_bits),):
            raise ValueError("weight vector does not match channel and hash_bits")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("non-finite scorer parameters")

    @property
    def is_regression(self) -> bool:
        return self.channel == "title"

    def margins(self, units: Sequence) -> np.ndarray:
        X = featurize_units(self.channel, units, self.hash_bits, self.ngram_range)
        return X @ self.weights + self.bias

    def score(self, units: Sequence) -> list[ChannelScore]:
        if len(units) == 0:
            return []
        out = []
        for z in self.margins(units):
            z = float(z)
            if self.is_regression:
                v = min(1.0, max(0.0, z))
                out.append(ChannelScore(v, v))
            else:
                out.append(ChannelScore(z, logistic(z)))
        return out

    # --- persistence -----------------------------------------------------

    def to_bytes(self) -> bytes:
        meta = {
            "format_version": SCORER_FORMAT_VERSION,
            "kind": self.kind,
            "channel": self.channel,
            "bias": self.bias,
            "hash_bits": self.hash_bits,
            "ngram_range": list(self.ngram_range),
            "trained_on": self.trained_on,
        }
        buf = io.BytesIO()
        np.savez_compressed(buf, weights=self.weights, meta=np.array(json.dumps(meta)))
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LinearTextScorer":
        try:
            with np.load(io.BytesIO(blob), allow_pickle=False) as data:
                meta = json.loads(str(data["meta"]))
                weights = data["weights"]
        except (ValueError, KeyError, OSError, EOFError) as exc:
            raise LoadError(f"corrupt scorer file: {exc}") from exc
        if meta.get("format_version") != SCORER_FORMAT_VERSION:
            raise VersionError(meta.get("format_version"), [SCORER_FORMAT_VERSION])
        return cls(
            channel=meta["channel"],
            weights=weights,
            bias=float(meta["bias"]),
            hash_bits=int(meta["hash_bits"]),
            ngram_range=tuple(meta["ngram_range"]),
            trained_on=meta.get("trained_on", "all"),
        )


class RemoteScorer:
    """Client for ``POST {endpoint}/score``."""

    kind = "remote"

    def __init__(
        self,
        channel: str,
        endpoint: str,
        timeout: float = 10.0,
        batch_size: int = 256,
        transport: httpx.BaseTransport | None = None,
        trained_on: str = "remote",
    ):
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        self.channel = channel
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.batch_size = batch_size
        self.trained_on = trained_on
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _wire_units(self, units: Sequence) -> list:
        if self.channel == "change":
            return [{"old": u[0], "new": u[1]} for u in units]
        return list(units)

    def score(self, units: Sequence) -> list[ChannelScore]:
        for u in units:
            check_unit(self.channel, u)
        out: list[ChannelScore] = []
        for start in range(0, len(units), self.batch_size):
            chunk = units[start : start + self.batch_size]
            body = {"channel": self.channel, "units": self._wire_units(chunk)}
            try:
                response = self._client.post(f"{self.endpoint}/score", json=body)
            except httpx.HTTPError as exc:
                raise ScoringError(f"remote {self.channel} scorer unreachable: {exc}") from exc
            if response.status_code != 200:
                raise ScoringError(f"remote {self.channel} scorer returned HTTP {response.status_code}")
            try:
                scores = response.json()["scores"]
                out.extend(ChannelScore(float(s["raw"]), float(s["probability"])) for s in scores)
            except (ValueError, KeyError, TypeError) as exc:
                raise ScoringError(f"malformed remote scorer response: {exc}") from exc
            if len(out) != start + len(chunk):
                raise ScoringError("remote scorer returned a different number of scores than units sent")
        return out

    def descriptor(self) -> dict:
        return {
            "format_version": SCORER_FORMAT_VERSION,
            "kind": self.kind,
            "channel": self.channel,
            "endpoint": self.endpoint,
            "timeout": self.timeout,
            "trained_on": self.trained_on,
        }

    @classmethod
    def from_descriptor(cls, data: dict, transport: httpx.BaseTransport | None = None) -> "RemoteScorer":
        if data.get("format_version") != SCORER_FORMAT_VERSION:
            raise VersionError(data.get("format_version"), [SCORER_FORMAT_VERSION])
        return cls(
            data["channel"], data["endpoint"], timeout=float(data.get("timeout", 10.0)),
            transport=transport, trained_on=data.get("trained_on", "remote"),
        )


def save_scorer(scorer, path: str | Path) -> None:
    path = Path(path)
    if isinstance(scorer, LinearTextScorer):
        path.write_bytes(scorer.to_bytes())
    elif isinstance(scorer, RemoteScorer):
        path.write_text(json.dumps(scorer.descriptor(), indent=2))
    else:
        raise TypeError(f"cannot persist scorer of type {type(scorer).__name__}")


def scorer_from_bytes(blob: bytes, transport: httpx.BaseTransport | None = None):
    if blob[:1] == b"{":
        try:
            data = json.loads(blob)
        except ValueError as exc:
            raise LoadError(f"corrupt scorer descriptor: {exc}") from exc
        return RemoteScorer.from_descriptor(data, transport)
    return LinearTextScorer.from_bytes(blob)


def load_scorer(path: str | Path, transport: httpx.BaseTransport | None = None):
    return scorer_from_bytes(Path(path).read_bytes(), transport)


# --- training ------------------------------------------------------------------


def train_scorer(
    channel: str,
    examples: Sequence[tuple[object, bool]],
    seed: int = 0,
    params: ScorerParams | None = None,
    trained_on: str = "all",
) -> LinearTextScorer:
    """Fit a logistic scorer on (unit, is_reverted) examples.

    The caller is expected to have applied the single-modification filter and
    class balancing (see ``channel_training_set``).
    """
    params = params or ScorerParams()
    if channel not in CLASSIFICATION_CHANNELS:
        raise ValueError(f"train_scorer handles {CLASSIFICATION_CHANNELS}, got {channel!r}")
    if not examples:
        raise TrainingError(f"no training examples for the {channel} scorer")
    y = np.array([float(bool(label)) for _, label in examples])
    if y.min() == y.max():
        raise TrainingError(f"{channel} scorer training data has a single class")
    X = featurize_units(channel, [u for u, _ in examples], params.hash_bits, params.ngram_range)
    model = LogisticRegression(C=params.C, solver="liblinear", max_iter=params.max_iter, random_state=seed)
    model.fit(X, y)
    return LinearTextScorer(channel, model.coef_.ravel(), float(model.intercept_[0]), params.hash_bits,
                            params.ngram_range, trained_on)


def build_title_targets(records, min_revisions: int = 5) -> dict[tuple[str, str], float]:
    """Revert rate per (wiki_db, page_title) for pages with enough revisions."""
    totals: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])
    for r in records:
        if r.is_reverted is None:
            continue
        entry = totals[r.page_key]
        entry[0] += 1
        entry[1] += int(r.is_reverted)
    return {key: rev / n for key, (n, rev) in sorted(totals.items()) if n >= min_revisions}


def train_title_regressor(
    targets: dict[tuple[str, str], float],
    seed: int = 0,
    params: ScorerParams | None = None,
    trained_on: str = "all",
) -> LinearTextScorer:
    params = params or ScorerParams()
    if not targets:
        raise TrainingError("no title targets")
    keys = sorted(targets)
    y = np.array([targets[k] for k in keys], dtype=np.float64)
    if np.unique(y).size < 2:
        raise TrainingError("title targets are constant")
    X = featurize_units("title", [title for _, title in keys], params.hash_bits, params.ngram_range)
    model = Ridge(alpha=params.title_alpha, solver="sparse_cg", random_state=seed)
    model.fit(X, y)
    return LinearTextScorer("title", np.asarray(model.coef_).ravel(), float(model.intercept_), params.hash_bits,
                            params.ngram_range, trained_on)


def channel_training_set(items, channel: str, seed: int = 0, single_modification: bool = True) -> list[tuple[object, bool]]:
    """Balanced (unit, is_reverted) examples for one channel from (record, delta) pairs.

    With ``single_modification`` only revisions holding exactly one unit in the
    channel contribute; otherwise every unit inherits its revision's label.
    """
    from ..filters import single_modification_filter, undersample_balance

    labeled = [(r, d) for r, d in items if r.is_reverted is not None]
    if single_modification:
        labeled = single_modification_filter(labeled, channel)
    examples = [(u, bool(r.is_reverted)) for r, d in labeled for u in d.units(channel)]
    if not examples:
        raise TrainingError(f"no {channel} units available for training")
    kept, _ = undersample_balance(examples, [label for _, label in examples], seed)
    return kept
