"""Exactness of the ranking metrics against brute-force references."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsegae import metrics


def brute_auc(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[np.asarray(labels) == 1]
    neg = scores[np.asarray(labels) == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_ap(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    order = sorted(range(len(scores)), key=lambda k: (-scores[k], k))
    total = 0.0
    hits = 0
    for rank, k in enumerate(order, start=1):
        if labels[k] == 1:
            hits += 1
            total += hits / rank
    return total / hits


def test_auc_hand_values():
    assert metrics.auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert metrics.auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]) == 0.0
    # All tied: every positive-negative pair contributes 0.5.
    assert metrics.auc([0.5, 0.5, 0.5, 0.5], [1, 1, 0, 0]) == 0.5


def test_ap_hand_value():
    # Ranked: pos, neg, pos -> (1/1 + 2/3) / 2.
    assert metrics.average_precision([0.9, 0.5, 0.4], [1, 0, 1]) == pytest.approx(5 / 6)


def test_single_class_rejected():
    with pytest.raises(metrics.MetricError):
        metrics.auc([0.1, 0.2], [1, 1])
    with pytest.raises(metrics.MetricError):
        metrics.average_precision([0.1, 0.2], [0, 0])
    with pytest.raises(metrics.MetricError):
        metrics.auc([0.1], [1, 0])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(min_value=0, max_value=6), min_size=2, max_size=40),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_metrics_match_bruteforce_with_ties(quantized, seed):
    # Integer-quantized scores force ties; labels must cover both classes.
    rng = np.random.default_rng(seed)
    scores = np.asarray(quantized, dtype=np.float64) / 3.0
    labels = rng.integers(0, 2, size=len(scores))
    labels[0], labels[1] = 0, 1
    assert metrics.auc(scores, labels) == brute_auc(scores, labels)
    assert metrics.average_precision(scores, labels) == brute_ap(scores, labels)


def test_evaluate_pairs_consistent_with_decode():
    from sparsegae.gae import decode_pairs

    rng = np.random.default_rng(2)
    z = rng.normal(size=(8, 4))
    pos = [(0, 1), (2, 3)]
    neg = [(4, 5), (6, 7), (1, 6)]
    m = metrics.evaluate_pairs(z, pos, neg)
    scores = decode_pairs(z, pos + neg)
    labels = np.array([1, 1, 0, 0, 0])
    assert m.auc == metrics.auc(scores, labels)
    assert m.ap == metrics.average_precision(scores, labels)
    assert (m.n_pos, m.n_neg) == (2, 3)
    with pytest.raises(metrics.MetricError):
        metrics.evaluate_pairs(z, pos, [])
