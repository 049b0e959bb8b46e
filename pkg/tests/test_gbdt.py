import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from revertrisk.errors import LoadError, PredictionError, TrainingError, VersionError, WeightingError
from revertrisk.gbdt import (
    BinMapper,
    TrainConfig,
    TreeEnsemble,
    compute_class_weights,
    deserialize,
    explain,
    feature_importance,
    predict_margin,
    predict_proba,
    serialize,
    train,
)
from revertrisk.gbdt.tree import grow_tree
from revertrisk.metrics import auc

from .oracles import exhaustive_root_split, random_ensemble, stump

FAST = TrainConfig(learning_rate=0.3, n_trees=20, max_depth=3)


def test_class_weights():
    assert compute_class_weights([1] * 100 + [0] * 900) == (9.0, 1.0)
    assert compute_class_weights([1] * 50 + [0] * 50) == (1.0, 1.0)
    with pytest.raises(WeightingError):
        compute_class_weights([0, 0, 0])


def separable(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = (X @ np.array([1.5, -2.0, 0.5]) > 0).astype(float)
    return X, y


def margin_separable(n=200, gap=1.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(4 * n, 3))
    s = X @ np.array([1.5, -2.0, 0.5])
    keep = np.abs(s) > gap
    return X[keep][:n], (s[keep][:n] > 0).astype(float)


def test_separable_set_reaches_perfect_auc():
    X, y = margin_separable()
    ens = train(X, y)
    assert auc(predict_proba(ens, X), y) == pytest.approx(1.0, abs=1e-9)


def test_gapless_separable_set_nearly_perfect():
    # without a margin some quantile bin straddles the boundary
    X, y = separable()
    assert auc(predict_proba(train(X, y), X), y) >= 0.999


def test_constant_features_give_leaves_only():
    X = np.ones((20, 2))
    y = np.array([1.0] * 5 + [0.0] * 15)
    w = np.where(y > 0, 3.0, 1.0)
    ens = train(X, y, w, FAST)
    assert all(t.n_nodes == 1 for t in ens.trees)
    p = predict_proba(ens, X)
    base_rate = 15 / 30
    assert np.allclose(p, p[0])
    assert abs(p[0] - base_rate) < 0.05
    assert ens.base_margin == pytest.approx(0.0, abs=1e-12)


def test_training_is_deterministic():
    X, y = separable(seed=3)
    assert serialize(train(X, y, config=FAST)) == serialize(train(X, y, config=FAST))


def test_training_input_validation():
    X, y = separable()
    with pytest.raises(TrainingError):
        train(X[:1], y[:1])
    with pytest.raises(TrainingError):
        train(X, np.zeros_like(y))
    with pytest.raises(TrainingError):
        train(X, y, sample_weight=-np.ones_like(y))
    bad = X.copy()
    bad[0, 0] = np.inf
    with pytest.raises(TrainingError):
        train(bad, y)
    with pytest.raises(ValueError):
        TrainConfig(n_bins=1)


def test_loss_non_increasing():
    X, y = separable(seed=5)
    X[::7, 1] = np.nan
    ens = train(X, y, np.where(y > 0, 2.0, 1.0), TrainConfig(n_trees=60, learning_rate=0.1))
    assert all(b <= a + 1e-12 for a, b in zip(ens.train_loss, ens.train_loss[1:]))


def test_zero_tree_and_stump_predictions():
    empty = TreeEnsemble([], 0.7, 0.1, ["a"])
    assert predict_proba(empty, [1.0]) == pytest.approx(expit(0.7))
    ens = TreeEnsemble([stump(0, 0.5, -1.0, 1.0)], 0.0, 0.1, ["a"])
    assert predict_proba(ens, [0.2]) == pytest.approx(0.2689414213699951)
    assert predict_proba(ens, [0.9]) == pytest.approx(expit(1.0))
    assert predict_margin(ens, [float("nan")]) == -1.0
    right_missing = TreeEnsemble([stump(0, 0.5, -1.0, 1.0, missing_left=False)], 0.0, 0.1, ["a"])
    assert predict_margin(right_missing, [float("nan")]) == 1.0
    with pytest.raises(PredictionError):
        predict_margin(ens, [0.1, 0.2])


def test_probabilities_strictly_inside_unit_interval():
    ens = TreeEnsemble([stump(0, 0.0, -500.0, 500.0)], 0.0, 0.1, ["a"])
    p = predict_proba(ens, np.array([[-1.0], [1.0]]))
    assert 0.0 < p[0] < p[1] < 1.0


def test_feature_importance_examples():
    ens = TreeEnsemble([stump(1, 0.0, -1, 1)], 0.0, 0.1, ["a", "b"])
    assert feature_importance(ens) == {"a": 0.0, "b": 1.0}
    assert feature_importance(TreeEnsemble([], 0.0, 0.1, ["a", "b"])) == {"a": 0.0, "b": 0.0}
    t1, t2 = stump(0, 0.0, -1, 1), stump(1, 0.0, -1, 1)
    t1.gain[0], t2.gain[0] = 3.0, 1.0
    assert feature_importance(TreeEnsemble([t1, t2], 0.0, 0.1, ["A", "B"])) == {"A": 0.75, "B": 0.25}


def test_explain_examples():
    base, contrib = explain(TreeEnsemble([], 0.3, 0.1, ["a"]), [0.0])
    assert base == 0.3 and contrib == {}
    t = stump(0, 0.5, -1.0, 3.0, cover=(3.0, 1.0))
    ens = TreeEnsemble([t], 0.0, 0.1, ["a"])
    base, contrib = explain(ens, [0.0])
    assert t.expected[0] == pytest.approx(0.0)
    assert contrib == {"a": pytest.approx(-1.0 - t.expected[0])}
    assert base + contrib["a"] == pytest.approx(predict_margin(ens, [0.0]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_explain_sums_to_margin(seed):
    rng = np.random.default_rng(seed)
    ens = random_ensemble(rng)
    x = rng.normal(size=5)
    x[rng.random(5) < 0.2] = np.nan
    base, contrib = explain(ens, x)
    assert base + sum(contrib.values()) == pytest.approx(predict_margin(ens, x), abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expected_is_cover_weighted(seed):
    ens = random_ensemble(np.random.default_rng(seed))
    for t in ens.trees:
        for i in range(t.n_nodes):
            if t.feature[i] >= 0:
                l, r = t.left[i], t.right[i]
                mean = (t.cover[l] * t.expected[l] + t.cover[r] * t.expected[r]) / (t.cover[l] + t.cover[r])
                assert t.expected[i] == pytest.approx(mean)


def test_batch_and_row_predictions_identical():
    X, y = separable(seed=9)
    X[::5, 0] = np.nan
    ens = train(X, y, config=FAST)
    batch = predict_margin(ens, X)
    rows = np.array([predict_margin(ens, x) for x in X])
    assert np.array_equal(batch, rows)


def test_serialization_roundtrip_and_errors():
    X, y = separable(seed=2)
    ens = train(X, y, config=FAST, feature_names=["x", "y", "z"])
    back = deserialize(serialize(ens))
    R = np.random.default_rng(0).normal(size=(100, 3))
    assert np.array_equal(predict_margin(back, R), predict_margin(ens, R))
    assert back.feature_names == ["x", "y", "z"]
    blob = serialize(ens)
    with pytest.raises(LoadError):
        deserialize(blob[: len(blob) // 2])
    future = blob.replace(b'"schema_version":1', b'"schema_version":99')
    with pytest.raises(VersionError):
        deserialize(future)


def test_binning():
    X = np.array([[1.0], [2.0], [np.nan], [2.0], [5.0]])
    m = BinMapper.fit(X, 4)
    assert list(m.edges[0]) == [1.0, 2.0, 5.0]
    assert m.transform(X)[:, 0].tolist() == [0, 1, m.missing_bin, 1, 2]
    big = BinMapper.fit(np.arange(1000, dtype=float)[:, None], 8)
    counts = np.bincount(big.transform(np.arange(1000, dtype=float)[:, None])[:, 0])
    assert len(counts) == 8 and counts.min() >= 100


def _dyadic_problem(rng, n, F, n_values):
    X = rng.integers(0, n_values, size=(n, F)).astype(float)
    X[rng.random((n, F)) < 0.15] = np.nan
    g = rng.integers(-8, 9, size=n) / 4.0
    h = rng.integers(1, 9, size=n) / 4.0
    return X, g, h


@pytest.mark.parametrize("seed", range(20))
def test_histogram_split_matches_exhaustive(seed):
    rng = np.random.default_rng(seed)
    X, g, h = _dyadic_problem(rng, int(rng.integers(4, 40)), int(rng.integers(1, 4)), int(rng.integers(2, 7)))
    mapper = BinMapper.fit(X, 8)
    tree, _ = grow_tree(mapper.transform(X), g, h, mapper, learning_rate=1.0, max_depth=1,
                        min_child_weight=0.25, l2_lambda=1.0)
    oracle = exhaustive_root_split(X, g, h, 0.25, 1.0)
    if oracle is None:
        assert tree.n_nodes == 1
    else:
        assert (int(tree.feature[0]), float(tree.threshold[0]), bool(tree.missing_left[0])) == oracle[:3]
        assert tree.gain[0] == pytest.approx(oracle[3], rel=1e-12)


def test_tie_break_prefers_lowest_feature():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
    g = np.array([1.0, -1.0, 1.0, -1.0])
    h = np.ones(4)
    mapper = BinMapper.fit(X, 4)
    tree, _ = grow_tree(mapper.transform(X), g, h, mapper, learning_rate=1.0, max_depth=1,
                        min_child_weight=0.5, l2_lambda=1.0)
    assert tree.feature[0] == 0


def test_unit_weights_equal_unweighted():
    X, y = separable(seed=4)
    a = train(X, y, config=FAST)
    b = train(X, y, sample_weight=np.ones_like(y), config=FAST)
    assert serialize(a) == serialize(b)
    assert compute_class_weights([1, 0, 1, 0]) == (1.0, 1.0)


def test_margin_clip_constant():
    assert math.isfinite(float(predict_margin(TreeEnsemble([], 100.0, 0.1, ["a"]), [0.0])))
