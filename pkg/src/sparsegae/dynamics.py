"""Temporal alignment of per-period embeddings and ideological drift detection.

Each later period is aligned to the first by orthogonal Procrustes (rotation /
reflection only, no centering or scaling), then per-node cosine similarities
to the first-period embedding are tracked over time. Nodes whose cosine series
decreases steadily (low Pearson r against the period index) are the drifters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DynamicsError(ValueError):
    pass


@dataclass
class ProcrustesResult:
    rotation: np.ndarray
    residual: float  # Frobenius norm of source @ R - target
    underdetermined: bool  # fewer shared rows than embedding dimension


@dataclass(frozen=True)
class EmbeddingSeries:
    """Ordered period labels with a node-name -> embedding map per period."""

    periods: tuple
    embeddings: tuple  # one dict per period

    def __post_init__(self):
        if len(self.periods) != len(self.embeddings):
            raise DynamicsError("periods and embedding maps must align")


@dataclass
class DriftResult:
    node: str
    periods: list
    cosines: list
    pearson_r: float | None  # None when the cosine series has zero variance
    skipped: bool = False
    notice: str | None = None


def procrustes_align(source: np.ndarray, target: np.ndarray) -> ProcrustesResult:
    """R = argmin ||source @ R - target||_F over orthogonal matrices.

    Solved via the SVD of source^T target: R = U V^T. A warning flag is set
    when there are fewer shared rows than embedding dimensions (the solution
    is still returned).
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape:
        raise DynamicsError(
            f"shape mismatch: {source.shape} vs {target.shape}"
        )
    u, _, vt = np.linalg.svd(source.T @ target)
    r = u @ vt
    residual = float(np.linalg.norm(source @ r - target))
    return ProcrustesResult(
        rotation=r,
        residual=residual,
        underdetermined=source.shape[0] < source.shape[1],
    )


def _cosine(a: np.ndarray, b: np.ndarray) -> float | None:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return None
    return float(np.dot(a, b) / (na * nb))


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if np.std(x) == 0 or np.std(y) == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def _align_to_first(series: EmbeddingSeries) -> list:
    """Per period, a node -> aligned-embedding map (first period unchanged).

    Each period is aligned directly to the first using only the nodes the two
    periods share; nodes absent from a period are dropped, not imputed.
    """
    first = series.embeddings[0]
    aligned = [dict(first)]
    for t in range(1, len(series.periods)):
        current = series.embeddings[t]
        shared = sorted(set(first) & set(current))
        if not shared:
            aligned.append({})
            continue
        src = np.array([current[n] for n in shared])
        tgt = np.array([first[n] for n in shared])
        r = procrustes_align(src, tgt).rotation
        aligned.append({n: np.asarray(current[n]) @ r for n in current})
    return aligned


def drift_series(series: EmbeddingSeries, node: str) -> DriftResult:
    """Cosine-to-first-period series for one node plus its Pearson r.

    The node must be present in the first period and at least 3 periods in
    total; zero-norm embeddings make the cosine undefined and skip the node.
    """
    if node not in series.embeddings[0]:
        return DriftResult(
            node=node, periods=[], cosines=[], pearson_r=None,
            skipped=True, notice="node absent from the first period",
        )
    aligned = _align_to_first(series)
    base = np.asarray(series.embeddings[0][node])
    periods, cosines = [], []
    for t in range(1, len(series.periods)):
        if node not in aligned[t]:
            continue
        cos = _cosine(base, aligned[t][node])
        if cos is None:
            return DriftResult(
                node=node, periods=[], cosines=[], pearson_r=None,
                skipped=True, notice="zero-norm embedding: cosine undefined",
            )
        periods.append(series.periods[t])
        cosines.append(cos)
    if len(cosines) < 2:
        return DriftResult(
            node=node, periods=periods, cosines=cosines, pearson_r=None,
            skipped=True, notice="node present in fewer than 3 periods",
        )
    r = _pearson(np.arange(1, len(cosines) + 1, dtype=np.float64), np.array(cosines))
    return DriftResult(node=node, periods=periods, cosines=cosines, pearson_r=r)


def drift_ranking(series: EmbeddingSeries) -> list:
    """All first-period nodes sorted ascending by Pearson r (drifters first).

    Nodes with undefined r (static series, missing periods) are listed after
    the ranked ones with their notice.
    """
    results = [drift_series(series, node) for node in sorted(series.embeddings[0])]
    ranked = [r for r in results if r.pearson_r is not None]
    ranked.sort(key=lambda r: (r.pearson_r, r.node))
    undefined = [r for r in results if r.pearson_r is None]
    return ranked + undefined
