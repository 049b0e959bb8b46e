"""Flat-array regression trees and histogram split finding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import BinMapper

LEAF = -1
TIE_RTOL = 1e-9


@dataclass
class Tree:
    """Node arrays; ``feature[i] == -1`` marks a leaf whose margin is ``value[i]``.

    ``expected`` holds the cover-weighted mean leaf value under each node and
    ``cover`` the hessian mass that reached it during training.
    """

    feature: np.ndarray
    threshold: np.ndarray
    missing_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    expected: np.ndarray
    cover: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] == LEAF

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def next_node(self, i: int, x) -> int:
        v = x[self.feature[i]]
        if v != v:  # NaN
            return int(self.left[i] if self.missing_left[i] else self.right[i])
        return int(self.left[i] if v <= self.threshold[i] else self.right[i])

    def leaf_for_row(self, x) -> int:
        i = 0
        while self.feature[i] != LEAF:
            i = self.next_node(i, x)
        return i

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            active = f != LEAF
            if not active.any():
                return node
            x = X[rows, np.where(active, f, 0)]
            go_left = np.where(np.isnan(x), self.missing_left[node], x <= self.threshold[node])
            node = np.where(active, np.where(go_left, self.left[node], self.right[node]), node)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "missing_left": self.missing_left.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "expected": self.expected.tolist(),
            "cover": self.cover.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            missing_left=np.asarray(d["missing_left"], dtype=bool),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
            expected=np.asarray(d["expected"], dtype=np.float64),
            cover=np.asarray(d["cover"], dtype=np.float64),
            gain=np.asarray(d["gain"], dtype=np.float64),
        )

    def validate(self, n_features: int) -> None:
        n = self.n_nodes
        arrays = (self.threshold, self.missing_left, self.left, self.right, self.value, self.expected, self.cover, self.gain)
        if n == 0 or any(a.shape != (n,) for a in arrays):
            raise ValueError("inconsistent tree arrays")
        internal = self.feature != LEAF
        if np.any(self.feature[internal] >= n_features) or np.any(self.feature[internal] < 0):
            raise ValueError("split feature out of range")
        for child in (self.left[internal], self.right[internal]):
            if np.any(child <= np.flatnonzero(internal)) or np.any(child >= n):
                raise ValueError("child index out of range")


@dataclass(frozen=True)
class Split:
    feature: int
    bin: int
    threshold: float
    missing_left: bool
    gain: float


def _score(G, H, lam):
    return G * G / (H + lam)


def best_split(
    G_hist: np.ndarray,
    H_hist: np.ndarray,
    C_hist: np.ndarray,
    G: float,
    H: float,
    mapper: BinMapper,
    min_child_weight: float,
    l2_lambda: float,
) -> Split | None:
    """Best split over all features and bin boundaries, or None if nothing has positive gain.

    Ties (within a relative 1e-9) go to the lowest feature, then the lowest
    threshold, then missing-left.
    """
    B = mapper.n_bins
    Gc = np.cumsum(G_hist[:, :B], axis=1)
    Hc = np.cumsum(H_hist[:, :B], axis=1)
    Cc = np.cumsum(C_hist[:, :B], axis=1)
    Gm, Hm, Cm = G_hist[:, B:], H_hist[:, B:], C_hist[:, B:]
    C = Cc[:, -1:] + Cm

    nb = np.array([mapper.n_feature_bins(f) for f in range(G_hist.shape[0])])
    in_range = np.arange(B)[None, :] < nb[:, None]
    parent = _score(G, H, l2_lambda)

    gains = np.full(Gc.shape + (2,), -np.inf)
    for d, (GL, HL, CL) in enumerate(((Gc + Gm, Hc + Hm, Cc + Cm), (Gc, Hc, Cc))):
        HR = H - HL
        CR = C - CL
        ok = in_range & (CL > 0) & (CR > 0) & (HL >= min_child_weight) & (HR >= min_child_weight)
        g = _score(GL, HL, l2_lambda) + _score(G - GL, HR, l2_lambda) - parent
        gains[..., d] = np.where(ok, g, -np.inf)

    flat = gains.ravel()
    top = flat.max()
    if not np.isfinite(top) or top <= 0:
        return None
    pick = int(np.argmax(flat >= top - TIE_RTOL * abs(top)))
    f, k, d = np.unravel_index(pick, gains.shape)
    f, k = int(f), int(k)
    threshold = float(mapper.edges[f][k]) if k < nb[f] - 1 else float("inf")
    return Split(f, k, threshold, d == 0, float(flat[pick]))


class _HistogramBuilder:
    def __init__(self, binned: np.ndarray, n_bins: int):
        n, F = binned.shape
        self.width = n_bins + 1
        self.F = F
        self.flat = binned.astype(np.int64) + np.arange(F, dtype=np.int64) * self.width

    def build(self, idx: np.ndarray, g: np.ndarray, h: np.ndarray):
        cells = self.flat[idx].ravel()
        size = self.F * self.width
        shape = (self.F, self.width)
        Gh = np.bincount(cells, weights=np.repeat(g[idx], self.F), minlength=size).reshape(shape)
        Hh = np.bincount(cells, weights=np.repeat(h[idx], self.F), minlength=size).reshape(shape)
        Ch = np.bincount(cells, minlength=size).reshape(shape)
        return Gh, Hh, Ch


def grow_tree(
    binned: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    mapper: BinMapper,
    *,
    learning_rate: float,
    max_depth: int,
    min_child_weight: float,
    l2_lambda: float,
    rows: np.ndarray | None = None,
) -> tuple[Tree, np.ndarray]:
    """Grow one tree; also return the per-row margin update for the training rows."""
    n = binned.shape[0]
    rows = np.arange(n) if rows is None else rows
    hist = _HistogramBuilder(binned, mapper.n_bins)
    update = np.zeros(n)

    feature, threshold, missing_left, left, right, value, cover, gain = [], [], [], [], [], [], [], []

    def new_node():
        for arr, default in ((feature, LEAF), (threshold, 0.0), (missing_left, True), (left, LEAF),
                             (right, LEAF), (value, 0.0), (cover, 0.0), (gain, 0.0)):
            arr.append(default)
        return len(feature) - 1

    root = new_node()
    stack = [(root, rows, 0, hist.build(rows, g, h))]
    while stack:
        node, idx, depth, (Gh, Hh, Ch) = stack.pop()
        G = float(g[idx].sum())
        H = float(h[idx].sum())
        cover[node] = H
        split = None
        if depth < max_depth and H >= 2 * min_child_weight and idx.size >= 2:
            split = best_split(Gh, Hh, Ch, G, H, mapper, min_child_weight, l2_lambda)
        if split is None:
            v = -learning_rate * G / (H + l2_lambda)
            value[node] = v
            update[idx] = v
            continue
        b = binned[idx, split.feature]
        go_left = np.where(b == mapper.missing_bin, split.missing_left, b <= split.bin)
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = split.feature
        threshold[node] = split.threshold
        missing_left[node] = split.missing_left
        gain[node] = split.gain
        ln, rn = new_node(), new_node()
        left[node], right[node] = ln, rn
        # build the smaller child directly, derive the larger by subtraction
        if li.size <= ri.size:
            small = hist.build(li, g, h)
            large = tuple(p - s for p, s in zip((Gh, Hh, Ch), small))
            lh, rh = small, large
        else:
            small = hist.build(ri, g, h)
            large = tuple(p - s for p, s in zip((Gh, Hh, Ch), small))
            lh, rh = large, small
        stack.append((rn, ri, depth + 1, rh))
        stack.append((ln, li, depth + 1, lh))

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        missing_left=np.asarray(missing_left, dtype=bool),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
        expected=np.zeros(len(feature)),
        cover=np.asarray(cover, dtype=np.float64),
        gain=np.asarray(gain, dtype=np.float64),
    )
    fill_expected(tree)
    return tree, update


def fill_expected(tree: Tree) -> None:
    """Children always have larger indices than parents, so one reverse pass suffices."""
    for i in range(tree.n_nodes - 1, -1, -1):
        if tree.feature[i] == LEAF:
            tree.expected[i] = tree.value[i]
        else:
            l, r = tree.left[i], tree.right[i]
            cl, cr = tree.cover[l], tree.cover[r]
            total = cl + cr
            if total > 0:
                tree.expected[i] = (cl * tree.expected[l] + cr * tree.expected[r]) / total
            else:
                tree.expected[i] = 0.5 * (tree.expected[l] + tree.expected[r])
