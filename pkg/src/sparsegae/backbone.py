"""Statistical backboning of weighted co-participation networks and
modularity-based polarization checks.

Edges are kept when their weight exceeds a binomial null expectation by a
significance margin; the margin is tuned by locating the knee of the
kept-edges vs kept-nodes curve. Polarization is quantified by Louvain
modularity compared against degree-preserving null shuffles.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import networkx as nx
import numpy as np

from .graphcore import Graph, build_graph

DEFAULT_DELTAS = tuple(float(x) for x in np.linspace(0.0, 6.0, 25))


class BackboneError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedNetwork:
    """Symmetric non-negative weight matrix with a zero diagonal."""

    node_names: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.node_names)
        if self.weights.shape != (n, n):
            raise BackboneError(f"weights shape {self.weights.shape} != ({n}, {n})")
        if np.any(self.weights < 0):
            raise BackboneError("weights must be non-negative")
        if np.any(np.diag(self.weights) != 0):
            raise BackboneError("weights must have a zero diagonal")
        if not np.allclose(self.weights, self.weights.T):
            raise BackboneError("weights must be symmetric")

    @property
    def total_weight(self) -> float:
        """Sum of all edge weights (each unordered pair counted once)."""
        return float(self.weights.sum()) / 2.0


@dataclass
class KneeResult:
    delta: float
    degenerate: bool  # flat or strictly linear curve: smallest delta returned


@dataclass
class BackboneReport:
    kept_edges: list
    delta_used: float
    degenerate_knee: bool
    knee_curve: list  # (delta, fraction_edges_kept, fraction_nodes_kept)
    stats: dict


@dataclass
class ModularityResult:
    partition: dict
    q: float
    null_mean: float | None = None
    null_std: float | None = None
    z_score: float | None = None
    z_defined: bool = True


def cooccurrence_weights(activity, min_comments: int = 10) -> WeightedNetwork:
    """Weight each node pair by the number of users active in both.

    `activity` yields (user, node, comment_count) records; a user counts for a
    pair when their comment count reaches `min_comments` in both nodes.
    """
    per_user: dict = {}
    names: set = set()
    for user, node, count in activity:
        if count < 0:
            raise BackboneError(f"negative comment count for {user!r} in {node!r}")
        names.add(node)
        if count >= min_comments:
            per_user.setdefault(user, set()).add(node)
    node_names = tuple(sorted(names))
    index = {name: k for k, name in enumerate(node_names)}
    w = np.zeros((len(node_names), len(node_names)))
    for nodes in per_user.values():
        for a, b in combinations(sorted(nodes), 2):
            i, j = index[a], index[b]
            w[i, j] += 1
            w[j, i] += 1
    return WeightedNetwork(node_names=node_names, weights=w)


def noise_corrected_filter(w: WeightedNetwork, delta: float) -> Graph:
    """Keep edges whose weight beats a binomial null by `delta` standard deviations.

    Null: each unit of total weight W lands on pair (i, j) with probability
    p_ij = (s_i / W)(s_j / W), so mu = W p and sigma = sqrt(W p (1 - p)).
    """
    if delta < 0:
        raise BackboneError("delta must be >= 0")
    total = w.total_weight
    if total == 0:
        return build_graph(w.node_names, [])
    strengths = w.weights.sum(axis=1)
    kept = []
    n = len(w.node_names)
    for i in range(n):
        for j in range(i + 1, n):
            wij = w.weights[i, j]
            if wij <= 0:
                continue
            p = (strengths[i] / total) * (strengths[j] / total)
            p = min(p, 1.0)
            mu = total * p
            sigma = np.sqrt(total * p * (1.0 - p))
            if wij > mu + delta * sigma:
                kept.append((i, j))
    return build_graph(w.node_names, kept)


def kneedle(xs, ys, deltas) -> KneeResult:
    """Difference-curve knee: normalize both axes to [0, 1] and return the
    delta maximizing y_norm - x_norm; ties broken toward smaller delta."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    deltas = list(deltas)
    if len(deltas) < 4:
        raise BackboneError("need at least 4 candidate deltas")
    x_range = xs.max() - xs.min()
    y_range = ys.max() - ys.min()
    if x_range == 0 or y_range == 0:
        return KneeResult(delta=min(deltas), degenerate=True)
    diff = (ys - ys.min()) / y_range - (xs - xs.min()) / x_range
    if np.allclose(diff, diff[0]):
        return KneeResult(delta=min(deltas), degenerate=True)
    best = min(
        (k for k in range(len(deltas))),
        key=lambda k: (-diff[k], deltas[k]),
    )
    return KneeResult(delta=float(deltas[best]), degenerate=False)


def backbone_curve(w: WeightedNetwork, deltas) -> list:
    """(delta, fraction_edges_kept, fraction_nodes_kept) per candidate delta."""
    base = noise_corrected_filter(w, 0.0)
    # Denominators: edges and non-isolated nodes of the unfiltered positive-weight graph.
    total_edges = int(np.count_nonzero(np.triu(w.weights)))
    total_nodes = int(np.count_nonzero(w.weights.sum(axis=1) > 0))
    curve = []
    for d in sorted(deltas):
        g = noise_corrected_filter(w, float(d))
        frac_edges = g.n_edges / total_edges if total_edges else 0.0
        deg = g.degrees()
        frac_nodes = (
            int(np.count_nonzero(deg > 0)) / total_nodes if total_nodes else 0.0
        )
        curve.append((float(d), frac_edges, frac_nodes))
    return curve


def knee_threshold(w: WeightedNetwork, deltas) -> KneeResult:
    """Pick the significance threshold at the knee of the edges-vs-nodes curve."""
    curve = backbone_curve(w, deltas)
    return kneedle(
        [c[1] for c in curve], [c[2] for c in curve], [c[0] for c in curve]
    )


def build_backbone(w: WeightedNetwork, deltas=DEFAULT_DELTAS) -> tuple:
    """Filter at the knee threshold and report summary statistics."""
    curve = backbone_curve(w, deltas)
    knee = kneedle([c[1] for c in curve], [c[2] for c in curve], [c[0] for c in curve])
    g = noise_corrected_filter(w, knee.delta)
    report = BackboneReport(
        kept_edges=g.edge_list(),
        delta_used=knee.delta,
        degenerate_knee=knee.degenerate,
        knee_curve=curve,
        stats=graph_stats(g),
    )
    return g, report


def graph_stats(g: Graph) -> dict:
    """Node/edge counts, mean degree, density, mean shortest path (largest component)."""
    n, m = g.n_nodes, g.n_edges
    deg = g.degrees()
    nodes_kept = int(np.count_nonzero(deg > 0))
    density = 2.0 * m / (n * (n - 1)) if n > 1 else 0.0
    gx = _to_networkx(g)
    if m > 0:
        largest = max(nx.connected_components(gx), key=len)
        mean_path = float(nx.average_shortest_path_length(gx.subgraph(largest)))
    else:
        mean_path = 0.0
    return {
        "n_nodes": n,
        "n_nodes_kept": nodes_kept,
        "n_edges": m,
        "mean_degree": float(deg.mean()) if n else 0.0,
        "density": density,
        "mean_shortest_path": mean_path,
    }


def _to_networkx(g: Graph) -> nx.Graph:
    gx = nx.Graph()
    gx.add_nodes_from(range(g.n_nodes))
    gx.add_edges_from(g.edge_list())
    return gx


def modularity(g: Graph, partition: dict) -> float:
    """Q = sum_c (e_c / m - (d_c / 2m)^2) for a node -> community map."""
    m = g.n_edges
    if m == 0:
        return 0.0
    intra: dict = {}
    deg_sum: dict = {}
    for i, j in g.edges:
        if partition[i] == partition[j]:
            intra[partition[i]] = intra.get(partition[i], 0) + 1
    deg = g.degrees()
    for node in range(g.n_nodes):
        c = partition[node]
        deg_sum[c] = deg_sum.get(c, 0) + int(deg[node])
    q = 0.0
    for c, d_c in deg_sum.items():
        e_c = intra.get(c, 0)
        q += e_c / m - (d_c / (2.0 * m)) ** 2
    return q


def louvain_modularity(g: Graph, seed: int = 0) -> ModularityResult:
    """Louvain partition (seed-deterministic) with its modularity."""
    if g.n_nodes == 0:
        raise BackboneError("empty graph")
    if g.n_edges == 0:
        partition = {i: i for i in range(g.n_nodes)}
        return ModularityResult(partition=partition, q=0.0)
    communities = nx.community.louvain_communities(_to_networkx(g), seed=seed)
    partition = {}
    for c, members in enumerate(communities):
        for node in members:
            partition[node] = c
    return ModularityResult(partition=partition, q=modularity(g, partition))


def double_edge_swap(
    edges: set, n_nodes: int, n_attempts: int, rng: np.random.Generator
) -> set:
    """Degree-preserving randomization by repeated double-edge swaps."""
    edge_list = list(edges)
    edge_set = set(edges)
    for _ in range(n_attempts):
        if len(edge_list) < 2:
            break
        k1, k2 = rng.integers(0, len(edge_list), size=2)
        if k1 == k2:
            continue
        a, b = edge_list[k1]
        c, d = edge_list[k2]
        # Rewire (a, b), (c, d) -> (a, d), (c, b).
        if len({a, b, c, d}) < 4:
            continue
        e1 = (a, d) if a < d else (d, a)
        e2 = (c, b) if c < b else (b, c)
        if e1 in edge_set or e2 in edge_set:
            continue
        edge_set.discard(edge_list[k1])
        edge_set.discard(edge_list[k2])
        edge_set.add(e1)
        edge_set.add(e2)
        edge_list[k1] = e1
        edge_list[k2] = e2
    return edge_set


def degree_preserving_null(
    g: Graph, n_shuffles: int, seed: int, swaps_per_edge: int = 10
) -> ModularityResult:
    """Null distribution of Louvain Q over degree-preserving shuffles.

    z = (q_obs - null_mean) / null_std; when no swap changes the graph (e.g. a
    complete graph) null_std is 0 and the z-score is flagged undefined.
    """
    if n_shuffles < 10:
        raise BackboneError("need at least 10 shuffles")
    observed = louvain_modularity(g, seed=seed)
    rng = np.random.default_rng(seed)
    n_attempts = max(1, swaps_per_edge * g.n_edges)
    null_qs = []
    for _ in range(n_shuffles):
        shuffled_edges = double_edge_swap(set(g.edges), g.n_nodes, n_attempts, rng)
        shuffled = Graph(node_names=g.node_names, edges=frozenset(shuffled_edges))
        null_qs.append(
            louvain_modularity(shuffled, seed=int(rng.integers(2**31))).q
        )
    null_mean = float(np.mean(null_qs))
    null_std = float(np.std(null_qs))
    if null_std == 0.0:
        return ModularityResult(
            partition=observed.partition,
            q=observed.q,
            null_mean=null_mean,
            null_std=null_std,
            z_score=None,
            z_defined=False,
        )
    return ModularityResult(
        partition=observed.partition,
        q=observed.q,
        null_mean=null_mean,
        null_std=null_std,
        z_score=(observed.q - null_mean) / null_std,
        z_defined=True,
    )


# ---------------------------------------------------------------------------
# Weighted network TSV format: node_i <tab> node_j <tab> weight


def save_weighted_tsv(w: WeightedNetwork, path) -> None:
    from pathlib import Path

    lines = []
    n = len(w.node_names)
    for i in range(n):
        for j in range(i + 1, n):
            if w.weights[i, j] > 0:
                lines.append(
                    f"{w.node_names[i]}\t{w.node_names[j]}\t{float(w.weights[i, j])!r}"
                )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_weighted_tsv(path) -> WeightedNetwork:
    from pathlib import Path

    p = Path(path)
    names: set = set()
    records = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise BackboneError(f"{p}:{lineno}: expected 3 tab-separated columns")
        a, b, weight = parts
        try:
            weight = float(weight)
        except ValueError as exc:
            raise BackboneError(f"{p}:{lineno}: bad weight {parts[2]!r}") from exc
        if a == b:
            raise BackboneError(f"{p}:{lineno}: self-pair {a!r}")
        names.update((a, b))
        records.append((a, b, weight))
    node_names = tuple(sorted(names))
    index = {name: k for k, name in enumerate(node_names)}
    w = np.zeros((len(node_names), len(node_names)))
    for a, b, weight in records:
        w[index[a], index[b]] += weight
        w[index[b], index[a]] += weight
    return WeightedNetwork(node_names=node_names, weights=w)
