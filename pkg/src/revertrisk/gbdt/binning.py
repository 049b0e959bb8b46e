"""Per-feature quantile binning, computed once from the training matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BinMapper:
    """``edges[f][k]`` is the inclusive upper edge of bin k of feature f.

    NaN values go to a dedicated missing bin at index ``n_bins``.
    """

    edges: tuple[np.ndarray, ...]
    n_bins: int

    @property
    def missing_bin(self) -> int:
        return self.n_bins

    @classmethod
    def fit(cls, X: np.ndarray, n_bins: int) -> "BinMapper":
        if n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        edges = []
        for f in range(X.shape[1]):
            col = X[:, f]
            vals = col[~np.isnan(col)]
            if vals.size == 0:
                edges.append(np.empty(0))
                continue
            uniq = np.unique(vals)
            if uniq.size <= n_bins:
                edges.append(uniq)
            else:
                q = np.quantile(vals, np.linspace(0.0, 1.0, n_bins + 1)[1:], method="inverted_cdf")
                e = np.unique(q)
                e[-1] = uniq[-1]
                edges.append(e)
        return cls(tuple(edges), n_bins)

    def transform(self, X: np.ndarray) -> np.ndarray:
        dtype = np.uint8 if self.n_bins < 255 else np.uint16
        out = np.empty(X.shape, dtype=dtype)
        for f, e in enumerate(self.edges):
            col = X[:, f]
            missing = np.isnan(col)
            if e.size:
                b = np.searchsorted(e, col, side="left")
                np.minimum(b, e.size - 1, out=b)
            else:
                b = np.zeros(col.shape, dtype=np.int64)
            b[missing] = self.missing_bin
            out[:, f] = b
        return out

    def n_feature_bins(self, f: int) -> int:
        return int(self.edges[f].size)
