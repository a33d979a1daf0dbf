"""Graph construction, normalized adjacency, splits and negative sampling."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsegae import graphcore as gc


def _names(n):
    return tuple(f"n{i}" for i in range(n))


@st.composite
def small_graphs(draw, max_nodes=50):
    n = draw(st.integers(min_value=2, max_value=max_nodes))
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = draw(st.lists(st.sampled_from(all_pairs), unique=True, max_size=len(all_pairs)))
    return gc.build_graph(_names(n), edges)


def test_build_graph_dedups_and_canonicalizes():
    g = gc.build_graph(_names(4), [(1, 0), (0, 1), ("n2", "n3")])
    assert g.edges == frozenset({(0, 1), (2, 3)})
    assert g.has_edge(1, 0)
    assert list(g.degrees()) == [1, 1, 1, 1]


def test_build_graph_rejects_self_loop_and_unknown_name():
    with pytest.raises(gc.GraphError):
        gc.build_graph(_names(3), [(0, 0)])
    with pytest.raises(gc.GraphError):
        gc.build_graph(_names(3), [("n0", "nope")])
    with pytest.raises(gc.GraphError):
        gc.build_graph(("a", "a"), [])


def test_adjacency_triangle():
    g = gc.build_graph(_names(3), [(0, 1), (1, 2), (0, 2)])
    a = g.adjacency()
    assert a.dtype == bool
    assert np.array_equal(a, np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=bool))


def test_normalized_adjacency_two_nodes():
    # A~ = [[1, 1], [1, 1]], degrees 2: every entry 1/2.
    g = gc.build_graph(_names(2), [(0, 1)])
    m = gc.normalized_adjacency(g).matrix
    assert np.allclose(m, 0.5)


@settings(max_examples=40, deadline=None)
@given(small_graphs())
def test_normalized_adjacency_matches_bruteforce(g):
    m = gc.normalized_adjacency(g).matrix
    n = g.n_nodes
    a_tilde = np.eye(n)
    for i, j in g.edges:
        a_tilde[i, j] = a_tilde[j, i] = 1.0
    d = a_tilde.sum(axis=1)
    expect = np.array(
        [
            [a_tilde[i, j] / np.sqrt(d[i] * d[j]) for j in range(n)]
            for i in range(n)
        ]
    )
    assert np.allclose(m, expect, atol=1e-12)
    assert np.allclose(m, np.asarray(m).T)


@settings(max_examples=30, deadline=None)
@given(small_graphs(), st.integers(min_value=0, max_value=2**31 - 1))
def test_sample_negatives_disjoint_from_edges(g, seed):
    free = g.n_nodes * (g.n_nodes - 1) // 2 - g.n_edges
    count = min(free, max(1, g.n_edges))
    if count == 0:
        return
    negs = gc.sample_negatives(g, count, seed=seed)
    assert len(negs) == len(set(negs)) == count
    for i, j in negs:
        assert i < j
        assert (i, j) not in g.edges


def test_sample_negatives_respects_exclude_and_exhaustion():
    g = gc.build_graph(_names(4), [(0, 1)])
    exclude = {(0, 2), (0, 3), (1, 2)}
    negs = gc.sample_negatives(g, 2, seed=0, exclude=exclude)
    assert set(negs) == {(1, 3), (2, 3)}
    with pytest.raises(gc.NegativeSamplingError):
        gc.sample_negatives(g, 3, seed=0, exclude=exclude)


def test_sample_negatives_deterministic():
    g = gc.build_graph(_names(30), [(i, i + 1) for i in range(29)])
    assert gc.sample_negatives(g, 20, seed=7) == gc.sample_negatives(g, 20, seed=7)


@settings(max_examples=25, deadline=None)
@given(small_graphs(), st.integers(min_value=0, max_value=2**31 - 1))
def test_split_edges_partitions_and_freezes_negatives(g, seed):
    if g.n_edges < 5:
        return
    n_non_edges = g.n_nodes * (g.n_nodes - 1) // 2 - g.n_edges
    if n_non_edges < 2 * int(g.n_edges * 0.2):
        # Too dense to freeze disjoint dev/test negatives.
        with pytest.raises(gc.NegativeSamplingError):
            gc.split_edges(g, (0.6, 0.2, 0.2), seed=seed)
        return
    split = gc.split_edges(g, (0.6, 0.2, 0.2), seed=seed)
    gc.validate_split(split, g)
    assert len(split.dev_edges) == int(g.n_edges * 0.2)
    assert len(split.test_edges) == int(g.n_edges * 0.2)
    assert not set(split.dev_negatives) & set(split.test_negatives)
    again = gc.split_edges(g, (0.6, 0.2, 0.2), seed=seed)
    assert again == split


def test_split_edges_rejects_bad_ratios_and_tiny_graphs():
    g = gc.build_graph(_names(10), [(i, i + 1) for i in range(9)])
    with pytest.raises(gc.GraphError):
        gc.split_edges(g, (0.5, 0.2, 0.2), seed=0)
    with pytest.raises(gc.GraphError):
        gc.split_edges(g, (0.8, -0.1, 0.3), seed=0)
    tiny = gc.build_graph(_names(4), [(0, 1), (1, 2)])
    with pytest.raises(gc.GraphError):
        gc.split_edges(tiny, (0.6, 0.2, 0.2), seed=0)


def test_graph_json_roundtrip(tmp_path):
    g = gc.build_graph(_names(5), [(0, 4), (1, 2)])
    path = tmp_path / "graph.json"
    gc.save_graph(g, path)
    assert gc.load_graph(path) == g


def test_split_json_roundtrip_validates(tmp_path):
    g = gc.build_graph(_names(12), [(i, j) for i in range(12) for j in range(i + 1, 12)][:20])
    split = gc.split_edges(g, (0.6, 0.2, 0.2), seed=1)
    path = tmp_path / "split.json"
    gc.save_split(split, path)
    assert gc.load_split(path, g) == split
    doc = json.loads(path.read_text())
    doc["dev_negatives"][0] = list(split.train_edges[0])
    path.write_text(json.dumps(doc))
    with pytest.raises(gc.GraphError):
        gc.load_split(path, g)
