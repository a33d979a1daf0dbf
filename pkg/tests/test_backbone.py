"""Backbone extraction, knee selection, modularity and null shuffles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsegae import backbone as bb
from sparsegae import graphcore as gc


def _two_block_weights(n=12, w_in=100.0, w_out=1.0):
    names = tuple(f"s{i}" for i in range(n))
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = w_in if (i % 2) == (j % 2) else w_out
    return bb.WeightedNetwork(node_names=names, weights=w)


def test_weighted_network_validation():
    names = ("a", "b")
    with pytest.raises(bb.BackboneError):
        bb.WeightedNetwork(names, np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(bb.BackboneError):
        bb.WeightedNetwork(names, np.array([[1.0, 2.0], [2.0, 0.0]]))
    with pytest.raises(bb.BackboneError):
        bb.WeightedNetwork(names, np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_cooccurrence_weights_threshold():
    activity = [
        ("u1", "sub_a", 12), ("u1", "sub_b", 15),
        ("u2", "sub_a", 11), ("u2", "sub_b", 3),   # below threshold in b
        ("u3", "sub_a", 10), ("u3", "sub_c", 10),
    ]
    w = bb.cooccurrence_weights(activity, min_comments=10)
    assert w.node_names == ("sub_a", "sub_b", "sub_c")
    i = {n: k for k, n in enumerate(w.node_names)}
    assert w.weights[i["sub_a"], i["sub_b"]] == 1.0
    assert w.weights[i["sub_a"], i["sub_c"]] == 1.0
    assert w.weights[i["sub_b"], i["sub_c"]] == 0.0
    with pytest.raises(bb.BackboneError):
        bb.cooccurrence_weights([("u", "x", -1)])


def test_noise_corrected_filter_keeps_strong_block_edges():
    w = _two_block_weights()
    g = bb.noise_corrected_filter(w, delta=1.0)
    for i, j in g.edges:
        assert (i % 2) == (j % 2)
    assert g.n_edges == 30  # both within-parity cliques survive intact
    assert bb.noise_corrected_filter(w, 0.0).n_edges >= g.n_edges


def test_kneedle_picks_corner_and_flags_degenerate():
    deltas = [0.0, 1.0, 2.0, 3.0, 4.0]
    xs = [1.0, 0.5, 0.45, 0.4, 0.0]
    ys = [1.0, 0.95, 0.6, 0.3, 0.0]
    knee = bb.kneedle(xs, ys, deltas)
    assert not knee.degenerate
    assert knee.delta == 1.0
    flat = bb.kneedle([1, 1, 1, 1, 1], [1, 1, 1, 1, 1], deltas)
    assert flat.degenerate and flat.delta == 0.0
    linear = bb.kneedle([0, 1, 2, 3, 4], [0, 1, 2, 3, 4], deltas)
    assert linear.degenerate and linear.delta == 0.0
    with pytest.raises(bb.BackboneError):
        bb.kneedle([1, 2], [1, 2], [0.0, 1.0])


def test_build_backbone_report_fields():
    w = _two_block_weights()
    g, report = bb.build_backbone(w, deltas=(0.0, 0.5, 1.0, 1.5, 2.0))
    assert report.kept_edges == g.edge_list()
    assert len(report.knee_curve) == 5
    assert set(report.stats) == {
        "n_nodes", "n_nodes_kept", "n_edges",
        "mean_degree", "density", "mean_shortest_path",
    }


def test_modularity_hand_value():
    # Two disjoint triangles: Q = 2 * (3/6 - (6/12)^2) = 0.5.
    g = gc.build_graph(
        tuple("abcdef"),
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
    )
    partition = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    assert bb.modularity(g, partition) == pytest.approx(0.5)
    # Everything in one community: Q = 1 - 1 = 0.
    assert bb.modularity(g, {i: 0 for i in range(6)}) == pytest.approx(0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_modularity_bounded(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 16))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = rng.random(len(pairs)) < 0.4
    edges = [p for p, keep in zip(pairs, mask) if keep]
    if not edges:
        return
    g = gc.build_graph(tuple(f"v{i}" for i in range(n)), edges)
    partition = {i: int(rng.integers(0, 3)) for i in range(n)}
    q = bb.modularity(g, partition)
    assert -1.0 <= q <= 1.0


def test_louvain_deterministic_per_seed():
    g = gc.build_graph(
        tuple("abcdef"),
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)],
    )
    r1 = bb.louvain_modularity(g, seed=0)
    r2 = bb.louvain_modularity(g, seed=0)
    assert r1.partition == r2.partition and r1.q == r2.q
    assert r1.q > 0.3


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_double_edge_swap_preserves_degrees(seed):
    rng = np.random.default_rng(seed)
    n = 14
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = rng.random(len(pairs)) < 0.3
    edges = {p for p, keep in zip(pairs, mask) if keep}
    if len(edges) < 2:
        return
    g = gc.build_graph(tuple(f"v{i}" for i in range(n)), sorted(edges))
    shuffled = bb.double_edge_swap(set(g.edges), n, n_attempts=200, rng=rng)
    g2 = gc.Graph(node_names=g.node_names, edges=frozenset(shuffled))
    assert np.array_equal(g.degrees(), g2.degrees())
    assert g2.n_edges == g.n_edges


def test_degree_preserving_null_flags_undefined_z():
    # Complete graph: no swap ever applies, the null is constant.
    n = 5
    g = gc.build_graph(
        tuple(f"v{i}" for i in range(n)),
        [(i, j) for i in range(n) for j in range(i + 1, n)],
    )
    result = bb.degree_preserving_null(g, n_shuffles=10, seed=0)
    assert not result.z_defined
    assert result.z_score is None
    with pytest.raises(bb.BackboneError):
        bb.degree_preserving_null(g, n_shuffles=5, seed=0)


def test_weighted_tsv_roundtrip(tmp_path):
    w = _two_block_weights(n=6)
    path = tmp_path / "weights.tsv"
    bb.save_weighted_tsv(w, path)
    loaded = bb.load_weighted_tsv(path)
    assert loaded.node_names == w.node_names
    assert np.array_equal(loaded.weights, w.weights)
    path.write_text("a\tb\tnot-a-number\n")
    with pytest.raises(bb.BackboneError):
        bb.load_weighted_tsv(path)
    path.write_text("a\ta\t1.0\n")
    with pytest.raises(bb.BackboneError):
        bb.load_weighted_tsv(path)
