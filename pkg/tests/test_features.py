"""Signal matrix assembly, mixture parameterization and the feature directory."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsegae import features as ft


def _bundle(rng, v=6, c=4):
    return ft.FeatureBundle(
        node_names=tuple(f"v{i}" for i in range(v)),
        concepts=tuple(f"c{j}" for j in range(c)),
        counts=rng.integers(0, 20, size=(v, c)),
        framing=rng.uniform(-1, 1, size=(v, c, ft.N_FOUNDATIONS)),
    )


def test_bundle_validation():
    rng = np.random.default_rng(0)
    b = _bundle(rng)
    assert b.n_nodes == 6 and b.n_concepts == 4
    with pytest.raises(ft.FeatureError):
        ft.FeatureBundle(b.node_names, b.concepts, b.counts[:, :3], b.framing)
    with pytest.raises(ft.FeatureError):
        ft.FeatureBundle(b.node_names, b.concepts, -b.counts - 1, b.framing)
    with pytest.raises(ft.FeatureError):
        ft.FeatureBundle(b.node_names, b.concepts, b.counts.astype(float), b.framing)
    with pytest.raises(ft.FeatureError):
        ft.FeatureBundle(b.node_names, b.concepts, b.counts, b.framing * 3.0)


def test_agenda_matrix_rows_sum_to_one_or_zero():
    counts = np.array([[2, 2, 4], [0, 0, 0], [5, 0, 0]])
    a = ft.agenda_matrix(counts)
    assert np.allclose(a[0], [0.25, 0.25, 0.5])
    assert np.all(a[1] == 0.0)
    assert np.allclose(a[2], [1.0, 0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**31 - 1))
def test_beta_on_simplex_and_gamma_in_unit_interval(c, seed):
    rng = np.random.default_rng(seed)
    params = ft.MixtureParams(
        beta_logits=rng.normal(0, 3, size=(c, ft.N_FOUNDATIONS)),
        gamma_logits=rng.normal(0, 3, size=c),
    )
    beta = params.beta()
    assert np.all(beta >= 0)
    assert np.allclose(beta.sum(axis=1), 1.0, atol=1e-12)
    gamma = params.gamma()
    assert np.all((gamma > 0) & (gamma < 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_mixed_signal_between_agenda_and_framing(seed):
    rng = np.random.default_rng(seed)
    b = _bundle(rng)
    params = ft.MixtureParams(
        beta_logits=rng.normal(0, 2, size=(4, ft.N_FOUNDATIONS)),
        gamma_logits=rng.normal(0, 2, size=4),
    )
    a = ft.agenda_matrix(b.counts)
    f = ft.framing_scalar(b.framing, params)
    u = ft.mixture_features(b.counts, b.framing, params, "mixed").psi
    lo = np.minimum(a, f)
    hi = np.maximum(a, f)
    assert np.all(u >= lo - 1e-12)
    assert np.all(u <= hi + 1e-12)


def test_framing_scalar_is_convex_combination():
    rng = np.random.default_rng(1)
    b = _bundle(rng)
    params = ft.MixtureParams.zeros(4)
    f = ft.framing_scalar(b.framing, params)
    assert np.allclose(f, b.framing.mean(axis=2))
    assert np.all(f >= b.framing.min(axis=2) - 1e-12)
    assert np.all(f <= b.framing.max(axis=2) + 1e-12)


def test_variant_endpoints():
    rng = np.random.default_rng(2)
    b = _bundle(rng)
    params = ft.MixtureParams(
        beta_logits=rng.normal(size=(4, ft.N_FOUNDATIONS)),
        gamma_logits=rng.normal(size=4),
    )
    assert np.array_equal(
        ft.mixture_features(b.counts, b.framing, params, "agenda").psi,
        ft.agenda_matrix(b.counts),
    )
    assert np.array_equal(
        ft.mixture_features(b.counts, b.framing, params, "framing").psi,
        ft.framing_scalar(b.framing, params),
    )
    with pytest.raises(ft.FeatureError):
        ft.mixture_features(b.counts, b.framing, params, "nope")


def test_standardized_columns_have_zero_mean_unit_std():
    rng = np.random.default_rng(3)
    b = _bundle(rng, v=20)
    psi = ft.mixture_features(
        b.counts, b.framing, ft.MixtureParams.zeros(4), "mixed",
        standardize_columns=True,
    ).psi
    assert np.allclose(psi.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(psi.std(axis=0), 1.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_standardize_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(7, 3))
    dy = rng.normal(size=(7, 3))
    dx = ft.standardize_backward(dy, x)
    eps = 1e-6
    for i in range(7):
        for j in range(3):
            xp = x.copy()
            xp[i, j] += eps
            xm = x.copy()
            xm[i, j] -= eps
            def val(m):
                mu = m.mean(axis=0)
                sd = m.std(axis=0)
                sd = np.where(sd > 0, sd, 1.0)
                return float(((m - mu) / sd * dy).sum())
            fd = (val(xp) - val(xm)) / (2 * eps)
            assert fd == pytest.approx(dx[i, j], rel=1e-4, abs=1e-6)


def test_mixture_backward_agenda_variant_is_zero():
    rng = np.random.default_rng(4)
    b = _bundle(rng)
    params = ft.MixtureParams.zeros(4)
    dpsi = rng.normal(size=(6, 4))
    dbeta, dgamma = ft.mixture_backward(dpsi, b.counts, b.framing, params, "agenda")
    assert not dbeta.any() and not dgamma.any()


def test_feature_dir_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    b = _bundle(rng)
    ft.save_feature_dir(b, tmp_path / "feat")
    loaded = ft.load_feature_dir(tmp_path / "feat")
    assert loaded.node_names == b.node_names
    assert loaded.concepts == b.concepts
    assert np.array_equal(loaded.counts, b.counts)
    assert np.array_equal(loaded.framing, b.framing)


def test_feature_dir_rejects_corruption(tmp_path):
    rng = np.random.default_rng(6)
    b = _bundle(rng)
    d = tmp_path / "feat"
    ft.save_feature_dir(b, d)
    (d / "counts.tsv").write_text("not\tnumbers\n")
    with pytest.raises(ft.FeatureError):
        ft.load_feature_dir(d)
    (d / "manifest.json").write_text("{broken")
    with pytest.raises(ft.FeatureError):
        ft.load_feature_dir(d)
    with pytest.raises(ft.FeatureError):
        ft.load_feature_dir(tmp_path / "missing")
