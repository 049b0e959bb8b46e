import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from revertrisk.errors import MetricError
from revertrisk.fairness import auc_difference, dir, dir_base, fairness_report, rule_based_baseline
from revertrisk.metrics import (
    auc,
    balanced_downsample_per_language,
    classification_metrics,
    evaluate_scores,
    pr_curve,
    precision_at_recall,
)
from revertrisk.records import UserKind

from .conftest import make_record
from .oracles import pair_count_auc

scores_labels = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.sampled_from([i / 8 for i in range(9)]), min_size=n, max_size=n),
        st.lists(st.booleans(), min_size=n, max_size=n),
    )
)


def test_auc_examples():
    assert auc([0.9, 0.8, 0.2], [1, 1, 0]) == 1.0
    assert auc([0.9, 0.8, 0.2], [1, 0, 1]) == 0.5
    assert auc([0.5, 0.5], [1, 0]) == 0.5
    with pytest.raises(MetricError):
        auc([0.1, 0.2], [1, 1])


@settings(max_examples=300, deadline=None)
@given(scores_labels)
def test_auc_matches_pair_counting(data):
    s, y = data
    assume(any(y) and not all(y))
    expected = pair_count_auc(s, y)
    assert auc(s, y) == pytest.approx(expected, abs=1e-9)
    assert auc(s, [not v for v in y]) == pytest.approx(1 - expected, abs=1e-9)
    assert auc(np.exp(3 * np.array(s)) - 7, y) == pytest.approx(expected, abs=1e-9)


def test_auc_pair_counting_at_size_1000():
    rng = np.random.default_rng(0)
    s = np.round(rng.random(1000), 2)
    y = rng.random(1000) < s
    assert auc(s, y) == pytest.approx(pair_count_auc(s, y), abs=1e-9)


def test_precision_at_recall_examples():
    assert precision_at_recall([0.9, 0.8, 0.7, 0.1], [1, 1, 0, 1]) == 0.75
    assert precision_at_recall([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert precision_at_recall([0.3, 0.2, 0.1, 0.05], [1, 1, 1, 1]) == 1.0
    with pytest.raises(MetricError):
        precision_at_recall([0.3, 0.2], [0, 0])


def test_first_reaching_precision_is_not_monotone():
    # the sweep can pick up precision again at lower thresholds
    s, y = [0.9, 0.8, 0.7, 0.6], [1, 0, 1, 1]
    assert precision_at_recall(s, y, 0.5) == pytest.approx(2 / 3)
    assert precision_at_recall(s, y, 1.0) == pytest.approx(0.75)


@settings(max_examples=200, deadline=None)
@given(scores_labels, st.floats(0, 1), st.floats(0, 1))
def test_interpolated_precision_monotone(data, r1, r2):
    s, y = data
    assume(any(y))
    lo, hi = sorted((r1, r2))
    assert precision_at_recall(s, y, lo, interpolated=True) >= precision_at_recall(s, y, hi, interpolated=True)


@settings(max_examples=200, deadline=None)
@given(scores_labels)
def test_pr_curve_recall_non_increasing_in_threshold(data):
    s, y = data
    assume(any(y))
    curve = pr_curve(s, y)
    thresholds = [t for t, _, _ in curve]
    recalls = [r for _, _, r in curve]
    assert thresholds == sorted(thresholds, reverse=True)
    assert recalls == sorted(recalls)
    assert all(0 <= p <= 1 and 0 <= r <= 1 for _, p, r in curve)


def test_classification_metrics():
    perfect = classification_metrics([0.9, 0.1, 0.8, 0.2], [1, 0, 1, 0])
    assert perfect["f1"] == perfect["accuracy"] == perfect["macro_f1"] == 1.0
    negative = classification_metrics([0.1, 0.1, 0.1, 0.1], [1, 0, 1, 0])
    assert negative["accuracy"] == 0.5 and negative["f1"] == 0.0
    assert "positive" in negative["f1_undefined"]
    assert classification_metrics([0.5], [1])["accuracy"] == 1.0
    # tp=2 fp=1 fn=1: precision 2/3, recall 2/3; negatives tn=1 of 2 predicted, 2 actual
    m = classification_metrics([0.9, 0.8, 0.7, 0.2, 0.1], [1, 1, 0, 1, 0])
    assert m["f1"] == pytest.approx(2 / 3)
    assert m["macro_f1"] == pytest.approx((2 / 3 + 0.5) / 2)
    assert m["accuracy"] == pytest.approx(0.6)


def test_balanced_downsample(caplog):
    langs = ["en"] * 100 + ["de"] * 10 + ["fr"] * 5
    labels = [1] * 10 + [0] * 90 + [1] * 5 + [0] * 5 + [0] * 5
    keep = balanced_downsample_per_language(langs, labels, seed=1)
    kept_langs = np.asarray(langs)[keep]
    kept_labels = np.asarray(labels)[keep]
    assert (kept_langs == "en").sum() == 20 and kept_labels[kept_langs == "en"].sum() == 10
    assert (kept_langs == "de").sum() == 10
    assert "fr" not in kept_langs
    assert "fr" in caplog.text
    assert np.array_equal(keep, balanced_downsample_per_language(langs, labels, seed=1))


def test_evaluate_scores_report():
    rng = np.random.default_rng(0)
    y = rng.random(400) < 0.3
    s = np.clip(y * 0.3 + rng.random(400) * 0.7, 0, 1)
    langs = np.where(rng.random(400) < 0.5, "en", "de")
    rep = evaluate_scores(s, y, langs)
    assert set(rep.per_language) == {"en", "de"}
    assert rep.positive_rate == 0.5
    assert 0.5 < rep.auc <= 1.0
    d = rep.to_dict()
    assert d["pr_curve"] and len(d["pr_curve"][0]) == 3


def test_dir_examples():
    priv = [False] * 4 + [True] * 4
    assert dir([1, 1, 0, 0, 1, 0, 0, 0], priv) == 2.0
    assert dir([1, 0, 1, 0, 1, 0, 1, 0], priv) == 1.0
    assert dir([1, 0, 0, 0, 0, 0, 0, 0], priv) == math.inf
    with pytest.raises(MetricError):
        dir([1, 0], [True, True])


def test_dir_base_examples():
    y = [1] * 28 + [0] * 72 + [1] * 4 + [0] * 96
    priv = [False] * 100 + [True] * 100
    assert dir_base(y, priv) == pytest.approx(7.0)
    assert dir_base([1, 0, 1, 0], [False, False, True, True]) == 1.0
    with pytest.raises(MetricError):
        dir_base([1, 0], [False, False])


@settings(max_examples=200, deadline=None)
@given(scores_labels, st.data())
def test_dir_properties(data, draw):
    s, y = data
    priv = draw.draw(st.lists(st.booleans(), min_size=len(s), max_size=len(s)))
    assume(any(priv) and not all(priv))
    s = np.array(s)
    a = dir(s, priv, 0.5)
    b = dir(np.exp(2 * s), priv, math.exp(1.0))
    assert (a == b) or (math.isnan(a) and math.isnan(b))
    perfect = dir(np.array(y, dtype=float), priv, 0.5)
    base = dir_base(y, priv)
    assert (perfect == base) or (math.isnan(perfect) and math.isnan(base))


def test_auc_difference_examples():
    s = [0.9, 0.1, 0.9, 0.1]
    y = [1, 0, 1, 0]
    assert auc_difference(s, y, [False, False, True, True]) == 0.0
    assert auc_difference([0.9, 0.1, 0.1, 0.9], y, [False, False, True, True]) == 1.0
    with pytest.raises(MetricError, match="anonymous"):
        auc_difference([0.9, 0.8, 0.1, 0.9], [1, 1, 1, 0], [False, False, True, True])


def test_fairness_report_serializes_infinity():
    rep = fairness_report([0.9, 0.1, 0.2, 0.1], [1, 0, 1, 0], [False, False, True, True])
    assert rep.dir == math.inf
    assert rep.auc_difference == pytest.approx(rep.auc_unprivileged - rep.auc_privileged)
    d = rep.to_dict()
    assert d["dir"] == "inf" and d["group_counts"] == {"anonymous": 2, "registered": 2}


def test_rule_based_baseline():
    records = [make_record(user_kind=UserKind.ANONYMOUS), make_record(user_kind=UserKind.REGISTERED)]
    assert rule_based_baseline(records).tolist() == [1.0, 0.0]
    with pytest.warns(UserWarning):
        assert rule_based_baseline([make_record(user_kind=UserKind.BOT)]).tolist() == [0.0]
