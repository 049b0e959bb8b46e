"""Ranking and classification metrics plus per-language evaluation reports."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import MetricError

log = logging.getLogger(__name__)


def _arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).astype(bool).ravel()
    if s.shape != y.shape:
        raise MetricError(f"{s.size} scores for {y.size} labels")
    if np.isnan(s).any():
        raise MetricError("scores contain NaN")
    return s, y


def auc(scores, labels) -> float:
    """Mann-Whitney AUC from average ranks; ties between classes count one half."""
    s, y = _arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError(f"AUC needs both classes (pos={n_pos}, neg={n_neg})")
    ranks = rankdata(s, method="average")
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def pr_curve(scores, labels) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) at every distinct score, thresholds descending."""
    s, y = _arrays(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("precision/recall need at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    predicted = last + 1
    return [(float(s[i]), float(tp[i] / predicted[k]), float(tp[i] / n_pos)) for k, i in enumerate(last)]


def precision_at_recall(scores, labels, target_recall: float = 0.75, interpolated: bool = False) -> float:
    """Precision at the highest threshold whose recall reaches ``target_recall``.

    With ``interpolated`` the best precision among all thresholds reaching the
    target is returned instead, which is monotone in the target.
    """
    if not 0.0 <= target_recall <= 1.0:
        raise ValueError("target_recall must be in [0, 1]")
    curve = pr_curve(scores, labels)
    reaching = [p for _, p, r in curve if r >= target_recall - 1e-12]
    if interpolated:
        return max(reaching)
    return reaching[0]


def classification_metrics(scores, labels, threshold: float = 0.5) -> dict:
    """F1, accuracy and class-macro F1 with ``score >= threshold`` predicted positive.

    An F1 whose precision or recall is undefined is reported as 0 and flagged.
    """
    s, y = _arrays(scores, labels)
    pred = s >= threshold
    undefined = []

    def f1_for(target: bool, name: str) -> float:
        t, p = (y == target), (pred == target)
        tp = int(np.sum(t & p))
        if t.sum() == 0 or p.sum() == 0:
            undefined.append(name)
            return 0.0
        precision, recall = tp / p.sum(), tp / t.sum()
        return 0.0 if tp == 0 else float(2 * precision * recall / (precision + recall))

    f1_pos = f1_for(True, "positive")
    f1_neg = f1_for(False, "negative")
    return {
        "f1": f1_pos,
        "accuracy": float(np.mean(pred == y)) if y.size else 0.0,
        "macro_f1": (f1_pos + f1_neg) / 2.0,
        "f1_undefined": undefined,
    }


def balanced_downsample_per_language(languages: Sequence[str], labels, seed: int = 0) -> np.ndarray:
    """Sorted indices keeping, per language, an equal number of each class.

    Languages missing a class are dropped with a warning.
    """
    langs = np.asarray(languages)
    y = np.asarray(labels).astype(bool)
    rng = np.random.default_rng(seed)
    keep = []
    for lang in sorted(set(langs.tolist())):
        idx = np.flatnonzero(langs == lang)
        pos, neg = idx[y[idx]], idx[~y[idx]]
        if pos.size == 0 or neg.size == 0:
            log.warning("dropping language %s from balanced evaluation: pos=%d neg=%d", lang, pos.size, neg.size)
            continue
        n = min(pos.size, neg.size)
        keep.append(np.sort(rng.choice(pos, n, replace=False)) if pos.size > n else pos)
        keep.append(np.sort(rng.choice(neg, n, replace=False)) if neg.size > n else neg)
    return np.sort(np.concatenate(keep)) if keep else np.empty(0, dtype=np.int64)


@dataclass
class MetricSet:
    auc: float | None
    pr_at_r75: float | None
    f1_at_half: float
    accuracy_at_half: float
    macro_f1: float
    n_samples: int
    positive_rate: float
    errors: list[str] = field(default_factory=list)


def metric_set(scores, labels, threshold: float = 0.5, target_recall: float = 0.75) -> MetricSet:
    s, y = _arrays(scores, labels)
    errors = []
    try:
        a = auc(s, y)
    except MetricError as exc:
        a = None
        errors.append(f"auc: {exc}")
    try:
        pr = precision_at_recall(s, y, target_recall)
    except MetricError as exc:
        pr = None
        errors.append(f"pr_at_r: {exc}")
    cm = classification_metrics(s, y, threshold)
    return MetricSet(
        auc=a,
        pr_at_r75=pr,
        f1_at_half=cm["f1"],
        accuracy_at_half=cm["accuracy"],
        macro_f1=cm["macro_f1"],
        n_samples=int(y.size),
        positive_rate=float(y.mean()) if y.size else 0.0,
        errors=errors,
    )


@dataclass
class EvalReport:
    auc: float | None
    pr_at_r75: float | None
    f1_at_half: float
    accuracy_at_half: float
    macro_f1: float
    pr_curve: list[tuple[float, float, float]]
    per_language: dict[str, MetricSet]
    n_samples: int
    positive_rate: float
    language_macro_f1: float | None = None
    threshold: float = 0.5
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pr_curve"] = [list(p) for p in self.pr_curve]
        return d


def evaluate_scores(
    scores,
    labels,
    languages: Sequence[str],
    threshold: float = 0.5,
    balance: bool = True,
    seed: int = 0,
) -> EvalReport:
    """Overall and per-language metrics; optionally on a per-language class-balanced subsample."""
    s, y = _arrays(scores, labels)
    langs = np.asarray(languages)
    if langs.shape != y.shape:
        raise MetricError("languages do not align with labels")
    if balance:
        keep = balanced_downsample_per_language(langs, y, seed)
        s, y, langs = s[keep], y[keep], langs[keep]
    overall = metric_set(s, y, threshold)
    try:
        curve = pr_curve(s, y)
    except MetricError as exc:
        curve = []
        overall.errors.append(f"pr_curve: {exc}")
    per_language = {}
    for lang in sorted(set(langs.tolist())):
        mask = langs == lang
        per_language[lang] = metric_set(s[mask], y[mask], threshold)
    f1s = [m.macro_f1 for m in per_language.values()]
    return EvalReport(
        auc=overall.auc,
        pr_at_r75=overall.pr_at_r75,
        f1_at_half=overall.f1_at_half,
        accuracy_at_half=overall.accuracy_at_half,
        macro_f1=overall.macro_f1,
        pr_curve=curve,
        per_language=per_language,
        n_samples=overall.n_samples,
        positive_rate=overall.positive_rate,
        language_macro_f1=float(np.mean(f1s)) if f1s else None,
        threshold=threshold,
        errors=overall.errors,
    )

