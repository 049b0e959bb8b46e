"""Mean/max pooling of per-unit channel scores into a fixed feature block."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from ..textdiff import TextDelta
from .scorers import ChannelScore

POOLED_CHANNELS = ("change", "insert", "remove")
POOL_STATS = ("mean_raw", "max_raw", "mean_prob", "max_prob", "count", "present")
MISSING = -1.0

POOLED_FEATURE_NAMES = tuple(f"{ch}_{stat}" for ch in POOLED_CHANNELS for stat in POOL_STATS) + ("title_score",)


@dataclass(frozen=True)
class PooledChannel:
    mean_raw: float
    max_raw: float
    mean_prob: float
    max_prob: float
    count: int


def pool(scores: Sequence[ChannelScore]) -> PooledChannel | None:
    """None marks a channel with no units."""
    if not scores:
        return None
    raws = sorted(s.raw for s in scores)
    probs = sorted(s.probability for s in scores)
    n = len(scores)
    # sorted sums keep the result independent of unit order
    return PooledChannel(sum(raws) / n, raws[-1], sum(probs) / n, probs[-1], n)


@dataclass(frozen=True)
class PooledTextFeatures:
    change: PooledChannel | None
    insert: PooledChannel | None
    remove: PooledChannel | None
    title_score: float

    def channel(self, name: str) -> PooledChannel | None:
        return getattr(self, name)

    def to_list(self) -> list[float]:
        out: list[float] = []
        for ch in POOLED_CHANNELS:
            block = self.channel(ch)
            if block is None:
                out.extend([MISSING, MISSING, MISSING, MISSING, 0.0, 0.0])
            else:
                out.extend([block.mean_raw, block.max_raw, block.mean_prob, block.max_prob, float(block.count), 1.0])
        out.append(self.title_score)
        return out

    def to_dict(self) -> dict[str, float]:
        return dict(zip(POOLED_FEATURE_NAMES, self.to_list()))


def _require(scorers: Mapping[str, object]) -> None:
    missing = [ch for ch in (*POOLED_CHANNELS, "title") if ch not in scorers]
    if missing:
        raise ValueError(f"missing scorers for channels {missing}")


def assemble_pooled(scorers: Mapping[str, object], delta: TextDelta, page_title: str) -> PooledTextFeatures:
    return assemble_pooled_batch(scorers, [delta], [page_title])[0]


def assemble_pooled_batch(
    scorers: Mapping[str, object], deltas: Sequence[TextDelta], titles: Sequence[str]
) -> list[PooledTextFeatures]:
    """Pool many revisions at once; each scorer sees all units of its channel in one call."""
    _require(scorers)
    if len(deltas) != len(titles):
        raise ValueError("deltas and titles differ in length")
    blocks: dict[str, list[PooledChannel | None]] = {}
    for ch in POOLED_CHANNELS:
        flat, owners = [], []
        for k, delta in enumerate(deltas):
            units = delta.units(ch)
            flat.extend(units)
            owners.append(len(units))
        scores = scorers[ch].score(flat) if flat else []
        pooled, pos = [], 0
        for n in owners:
            pooled.append(pool(scores[pos : pos + n]))
            pos += n
        blocks[ch] = pooled
    title_scores = scorers["title"].score(list(titles)) if titles else []
    return [
        PooledTextFeatures(blocks["change"][k], blocks["insert"][k], blocks["remove"][k], title_scores[k].raw)
        for k in range(len(deltas))
    ]
