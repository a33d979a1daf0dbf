"""Ranking metrics for link prediction: Mann-Whitney AUC and average precision.

AUC is computed in its pairwise-probability form (ties count 0.5) rather than
by trapezoidal ROC integration, so values are exact in the presence of ties.
AP tie order is fixed by input index for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    """Metric undefined for the given inputs (e.g. a single class)."""


@dataclass(frozen=True)
class Metrics:
    auc: float
    ap: float
    n_pos: int
    n_neg: int


def _split_classes(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels must have equal length")
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricError("both classes must be present")
    return pos, neg


def auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative.

    Ties contribute 0.5. Exact: computed from integer pair counts.
    """
    pos, neg = _split_classes(scores, labels)
    sorted_neg = np.sort(neg)
    below = np.searchsorted(sorted_neg, pos, side="left")
    below_or_equal = np.searchsorted(sorted_neg, pos, side="right")
    greater = int(below.sum())
    ties = int((below_or_equal - below).sum())
    return (greater + 0.5 * ties) / (len(pos) * len(neg))


def average_precision(scores, labels) -> float:
    """Mean precision at each positive's rank in descending-score order.

    Ties are broken by input index (stable sort on the negated scores).
    """
    _split_classes(scores, labels)
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    total = 0.0
    hits = 0
    for rank, y in enumerate(ranked, start=1):
        if y == 1:
            hits += 1
            total += hits / rank
    return total / hits


def evaluate_pairs(z: np.ndarray, positives, negatives) -> Metrics:
    """Score positive and negative node pairs from embeddings and compute both metrics."""
    from .gae import decode_pairs

    positives = list(positives)
    negatives = list(negatives)
    if not positives or not negatives:
        raise MetricError("evaluation needs at least one positive and one negative pair")
    pairs = positives + negatives
    labels = np.array([1] * len(positives) + [0] * len(negatives))
    scores = decode_pairs(z, pairs)
    return Metrics(
        auc=auc(scores, labels),
        ap=average_precision(scores, labels),
        n_pos=len(positives),
        n_neg=len(negatives),
    )
