"""Hashed character n-gram encoding of channel inputs."""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.feature_extraction.text import HashingVectorizer
from sklearn.preprocessing import normalize

CHANNELS = ("change", "insert", "remove", "title")
PAIR_CHANNELS = frozenset({"change"})


@lru_cache(maxsize=None)
def _vectorizer(hash_bits: int, ngram_range: tuple[int, int]) -> HashingVectorizer:
    return HashingVectorizer(
        analyzer="char",
        ngram_range=ngram_range,
        n_features=2**hash_bits,
        alternate_sign=True,
        lowercase=True,
        norm=None,
        dtype=np.float64,
    )


def feature_dim(channel: str, hash_bits: int) -> int:
    return 2 ** hash_bits * (2 if channel in PAIR_CHANNELS else 1)


def check_unit(channel: str, unit) -> None:
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    if channel in PAIR_CHANNELS:
        if not (isinstance(unit, (tuple, list)) and len(unit) == 2 and all(isinstance(u, str) for u in unit)):
            raise TypeError(f"{channel} units are (old, new) string pairs, got {unit!r}")
    elif not isinstance(unit, str):
        raise TypeError(f"{channel} units are strings, got {type(unit).__name__}")


def featurize_units(
    channel: str,
    units: Sequence,
    hash_bits: int = 18,
    ngram_range: tuple[int, int] = (1, 3),
) -> sp.csr_matrix:
    """One L2-normalized row per unit.

    Change pairs hash the old text into the first block of columns and the new
    text into a second block of the same width.
    """
    for unit in units:
        check_unit(channel, unit)
    vec = _vectorizer(hash_bits, tuple(ngram_range))
    if channel in PAIR_CHANNELS:
        if not units:
            return sp.csr_matrix((0, feature_dim(channel, hash_bits)))
        old = vec.transform([u[0] for u in units])
        new = vec.transform([u[1] for u in units])
        X = sp.hstack([old, new], format="csr")
    else:
        if not units:
            return sp.csr_matrix((0, feature_dim(channel, hash_bits)))
        X = vec.transform(list(units))
    X = normalize(X, norm="l2", copy=False)
    X.sort_indices()
    return X


def featurize_text(channel: str, unit, hash_bits: int = 18, ngram_range: tuple[int, int] = (1, 3)) -> sp.csr_matrix:
    return featurize_units(channel, [unit], hash_bits, ngram_range)
