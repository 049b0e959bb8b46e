"""Group fairness measures between anonymous (unprivileged) and registered (privileged) editors."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import MetricError
from .metrics import auc
from .records import UserKind


def _groups(privileged, n: int) -> np.ndarray:
    g = np.asarray(privileged).astype(bool).ravel()
    if g.size != n:
        raise MetricError(f"{g.size} group flags for {n} samples")
    if g.all() or not g.any():
        raise MetricError("both the privileged and the unprivileged group must be present")
    return g


def _rate_ratio(flags: np.ndarray, privileged: np.ndarray) -> float:
    """Pr(flag | unprivileged) / Pr(flag | privileged); inf when only the denominator is zero."""
    unpriv = float(flags[~privileged].mean())
    priv = float(flags[privileged].mean())
    if priv == 0.0:
        return float("nan") if unpriv == 0.0 else float("inf")
    return unpriv / priv


def dir(scores, privileged, threshold: float = 0.5) -> float:  # noqa: A001 - domain name
    """Disparate impact ratio of predicted-positive rates (score >= threshold)."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    g = _groups(privileged, s.size)
    return _rate_ratio(s >= threshold, g)


disparate_impact_ratio = dir


def dir_base(labels, privileged) -> float:
    """The same ratio computed on true labels."""
    y = np.asarray(labels).astype(bool).ravel()
    g = _groups(privileged, y.size)
    return _rate_ratio(y, g)


def group_auc(scores, labels, mask, name: str) -> float:
    s = np.asarray(scores, dtype=np.float64)[mask]
    y = np.asarray(labels).astype(bool)[mask]
    try:
        return auc(s, y)
    except MetricError as exc:
        raise MetricError(f"AUC undefined for group {name!r}: {exc}") from exc


def auc_difference(scores, labels, privileged) -> float:
    """AUC(unprivileged) - AUC(privileged); negative means anonymous edits are ranked worse."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    g = _groups(privileged, s.size)
    return group_auc(s, labels, ~g, "anonymous") - group_auc(s, labels, g, "registered")


@dataclass
class FairnessReport:
    dir: float
    dir_base: float
    auc_unprivileged: float | None
    auc_privileged: float | None
    auc_difference: float | None
    group_counts: dict[str, int]
    threshold: float
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity; keep the marker readable
        for k in ("dir", "dir_base"):
            v = d[k]
            if v != v:
                d[k] = "nan"
            elif v in (float("inf"), float("-inf")):
                d[k] = "inf"
        return d


def fairness_report(scores, labels, privileged, threshold: float = 0.5) -> FairnessReport:
    s = np.asarray(scores, dtype=np.float64).ravel()
    g = _groups(privileged, s.size)
    errors = []
    aucs = {}
    for name, mask in (("anonymous", ~g), ("registered", g)):
        try:
            aucs[name] = group_auc(s, labels, mask, name)
        except MetricError as exc:
            aucs[name] = None
            errors.append(str(exc))
    diff = None
    if aucs["anonymous"] is not None and aucs["registered"] is not None:
        diff = aucs["anonymous"] - aucs["registered"]
    return FairnessReport(
        dir=dir(s, g, threshold),
        dir_base=dir_base(labels, g),
        auc_unprivileged=aucs["anonymous"],
        auc_privileged=aucs["registered"],
        auc_difference=diff,
        group_counts={"anonymous": int((~g).sum()), "registered": int(g.sum())},
        threshold=threshold,
        errors=errors,
    )


def rule_based_baseline(records) -> np.ndarray:
    """Flags every anonymous revision and nothing else."""
    out = np.zeros(len(records))
    bots = 0
    for i, r in enumerate(records):
        if r.user_kind == UserKind.ANONYMOUS:
            out[i] = 1.0
        elif r.user_kind == UserKind.BOT:
            bots += 1
    if bots:
        warnings.warn(f"{bots} bot revisions reached the rule-based baseline; scored 0.0", stacklevel=2)
    return out
