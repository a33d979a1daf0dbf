"""Graph representation, normalized adjacency, edge splitting and negative sampling.

All types are immutable after construction. Sampling operations take explicit
seeds so parallel callers can create independent generators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

# Graphs up to this size use dense adjacency matrices; larger ones go sparse.
DENSE_NODE_LIMIT = 2048

Pair = tuple[int, int]


class GraphError(ValueError):
    """Invalid graph construction or graph file contents."""


class NegativeSamplingError(GraphError):
    """Not enough non-edges available to satisfy a sampling request."""


def _canon(i: int, j: int) -> Pair:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    """Unweighted undirected graph with dense node indices.

    Invariants: no self-loops, no duplicate edges, indices in [0, n_nodes).
    """

    node_names: tuple[str, ...]
    edges: frozenset[Pair]

    def __post_init__(self):
        if len(set(self.node_names)) != len(self.node_names):
            raise GraphError("duplicate node names")
        n = len(self.node_names)
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"self-loop edge ({i}, {j})")
            if i > j:
                raise GraphError(f"non-canonical edge ({i}, {j})")
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for {n} nodes")

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return _canon(i, j) in self.edges

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self):
        """Boolean adjacency matrix, dense below DENSE_NODE_LIMIT nodes."""
        n = self.n_nodes
        if self.edges:
            rows, cols = np.array(sorted(self.edges), dtype=np.int64).T
        else:
            rows = cols = np.array([], dtype=np.int64)
        if n <= DENSE_NODE_LIMIT:
            a = np.zeros((n, n), dtype=bool)
            a[rows, cols] = True
            a[cols, rows] = True
            return a
        data = np.ones(2 * len(rows), dtype=bool)
        return sp.csr_matrix(
            (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n),
        )

    def edge_list(self) -> list[Pair]:
        return sorted(self.edges)


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetrically normalized adjacency with self-loops: D~^{-1/2} (A+I) D~^{-1/2}."""

    matrix: object  # dense ndarray or scipy sparse matrix
    graph: Graph


@dataclass(frozen=True)
class EdgeSplit:
    """Disjoint train/dev/test edge partition with frozen dev/test negatives."""

    train_edges: tuple[Pair, ...]
    dev_edges: tuple[Pair, ...]
    test_edges: tuple[Pair, ...]
    dev_negatives: tuple[Pair, ...]
    test_negatives: tuple[Pair, ...]
    seed: int


def build_graph(node_names: Sequence[str], edge_pairs: Iterable[tuple]) -> Graph:
    """Build a deduplicated, self-loop-free undirected graph.

    Edge endpoints may be node names or integer indices. Reversed duplicates
    collapse to a single edge; a self-loop pair is rejected.
    """
    names = tuple(node_names)
    index = {name: k for k, name in enumerate(names)}
    edges: set[Pair] = set()
    for pair in edge_pairs:
        u, v = pair
        i = _resolve(u, index, len(names))
        j = _resolve(v, index, len(names))
        if i == j:
            raise GraphError(f"self-loop pair {pair!r}")
        edges.add(_canon(i, j))
    return Graph(node_names=names, edges=frozenset(edges))


def _resolve(endpoint, index: dict, n: int) -> int:
    if isinstance(endpoint, str):
        if endpoint not in index:
            raise GraphError(f"unknown node name {endpoint!r}")
        return index[endpoint]
    i = int(endpoint)
    if not 0 <= i < n:
        raise GraphError(f"node index {i} out of range for {n} nodes")
    return i


def normalized_adjacency(g: Graph) -> NormalizedAdjacency:
    """Compute D~^{-1/2} (A+I) D~^{-1/2} for the graph with added self-loops."""
    if g.n_nodes == 0:
        raise GraphError("empty graph")
    a = g.adjacency()
    if sp.issparse(a):
        a_tilde = a.astype(np.float64) + sp.identity(g.n_nodes, format="csr")
        d = np.asarray(a_tilde.sum(axis=1)).ravel()
        inv_sqrt = sp.diags(1.0 / np.sqrt(d))
        m = (inv_sqrt @ a_tilde @ inv_sqrt).tocsr()
    else:
        a_tilde = a.astype(np.float64) + np.eye(g.n_nodes)
        d = a_tilde.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(d)
        m = a_tilde * inv_sqrt[:, None] * inv_sqrt[None, :]
    return NormalizedAdjacency(matrix=m, graph=g)


def sample_negatives(
    g: Graph,
    count: int,
    seed: int,
    exclude: frozenset[Pair] | set[Pair] = frozenset(),
) -> list[Pair]:
    """Sample `count` distinct non-edges, excluding self-pairs and `exclude`.

    Deterministic per seed. Raises NegativeSamplingError when the graph is too
    dense to supply enough negatives.
    """
    if count == 0:
        return []
    n = g.n_nodes
    total_pairs = n * (n - 1) // 2
    exclude = set(exclude)
    n_available = total_pairs - g.n_edges - len(set(exclude) - g.edges)
    if count > n_available:
        raise NegativeSamplingError(
            f"requested {count} negatives but only {n_available} non-edges "
            f"are available outside the excluded set"
        )
    rng = np.random.default_rng(seed)
    forbidden = g.edges | exclude
    # Rejection sampling is fast on sparse graphs; fall back to full
    # enumeration when the free pair pool is tight.
    if n_available >= 4 * count and n > 3:
        chosen: set[Pair] = set()
        max_tries = 100 * count + 1000
        for _ in range(max_tries):
            i, j = rng.integers(0, n, size=2)
            if i == j:
                continue
            pair = _canon(int(i), int(j))
            if pair in forbidden or pair in chosen:
                continue
            chosen.add(pair)
            if len(chosen) == count:
                return sorted(chosen)
    all_non_edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if (i, j) not in forbidden
    ]
    idx = rng.choice(len(all_non_edges), size=count, replace=False)
    return sorted(all_non_edges[k] for k in idx)


def split_edges(g: Graph, ratios: tuple[float, float, float], seed: int) -> EdgeSplit:
    """Partition edges into train/dev/test and freeze balanced dev/test negatives.

    Sizes follow floor-then-remainder assignment with remainder edges going to
    the training split, keeping dev/test sizes exact for metric comparability.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise GraphError("ratios must be three positive reals")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise GraphError(f"ratios must sum to 1, got {sum(ratios)}")
    m = g.n_edges
    if m < 5:
        raise GraphError(f"graph has only {m} edges; need at least 5 to split")
    n_dev = int(m * ratios[1])
    n_test = int(m * ratios[2])
    rng = np.random.default_rng(seed)
    edges = g.edge_list()
    order = rng.permutation(m)
    shuffled = [edges[k] for k in order]
    dev = tuple(shuffled[:n_dev])
    test = tuple(shuffled[n_dev : n_dev + n_test])
    train = tuple(shuffled[n_dev + n_test :])
    # Dev and test negatives are frozen once, disjoint from E and each other.
    dev_neg = tuple(sample_negatives(g, n_dev, seed=int(rng.integers(2**31))))
    test_neg = tuple(
        sample_negatives(
            g, n_test, seed=int(rng.integers(2**31)), exclude=set(dev_neg)
        )
    )
    return EdgeSplit(
        train_edges=train,
        dev_edges=dev,
        test_edges=test,
        dev_negatives=dev_neg,
        test_negatives=test_neg,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# JSON serialization


def graph_to_json(g: Graph) -> dict:
    return {"nodes": list(g.node_names), "edges": [list(e) for e in g.edge_list()]}


def graph_from_json(doc: dict) -> Graph:
    if not isinstance(doc, dict) or "nodes" not in doc or "edges" not in doc:
        raise GraphError("graph document must have 'nodes' and 'edges' keys")
    return build_graph(doc["nodes"], [tuple(e) for e in doc["edges"]])


def save_graph(g: Graph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_json(g), sort_keys=True, indent=1))


def load_graph(path: str | Path) -> Graph:
    return graph_from_json(json.loads(Path(path).read_text()))


def split_to_json(s: EdgeSplit) -> dict:
    return {
        "train_edges": [list(e) for e in s.train_edges],
        "dev_edges": [list(e) for e in s.dev_edges],
        "test_edges": [list(e) for e in s.test_edges],
        "dev_negatives": [list(e) for e in s.dev_negatives],
        "test_negatives": [list(e) for e in s.test_negatives],
        "seed": s.seed,
    }


def split_from_json(doc: dict, g: Graph | None = None) -> EdgeSplit:
    keys = [
        "train_edges",
        "dev_edges",
        "test_edges",
        "dev_negatives",
        "test_negatives",
        "seed",
    ]
    if not isinstance(doc, dict) or any(k not in doc for k in keys):
        raise GraphError(f"split document must have keys {keys}")
    split = EdgeSplit(
        train_edges=tuple(tuple(e) for e in doc["train_edges"]),
        dev_edges=tuple(tuple(e) for e in doc["dev_edges"]),
        test_edges=tuple(tuple(e) for e in doc["test_edges"]),
        dev_negatives=tuple(tuple(e) for e in doc["dev_negatives"]),
        test_negatives=tuple(tuple(e) for e in doc["test_negatives"]),
        seed=int(doc["seed"]),
    )
    if g is not None:
        validate_split(split, g)
    return split


def validate_split(s: EdgeSplit, g: Graph) -> None:
    """Check split invariants against the source graph."""
    pos = [set(s.train_edges), set(s.dev_edges), set(s.test_edges)]
    union = pos[0] | pos[1] | pos[2]
    if union != g.edges:
        raise GraphError("split edge lists do not partition the graph's edges")
    if sum(len(p) for p in pos) != g.n_edges:
        raise GraphError("split edge lists overlap")
    for name, negs, n_expect in [
        ("dev", s.dev_negatives, len(s.dev_edges)),
        ("test", s.test_negatives, len(s.test_edges)),
    ]:
        if len(negs) != n_expect:
            raise GraphError(f"{name} negatives do not match positive count")
        for i, j in negs:
            if i == j or _canon(i, j) in g.edges:
                raise GraphError(f"invalid {name} negative ({i}, {j})")


def save_split(s: EdgeSplit, path: str | Path) -> None:
    Path(path).write_text(json.dumps(split_to_json(s), sort_keys=True, indent=1))


def load_split(path: str | Path, g: Graph | None = None) -> EdgeSplit:
    return split_from_json(json.loads(Path(path).read_text()), g)
