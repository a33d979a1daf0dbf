"""Two-layer graph-convolutional encoder with inner-product decoder.

Forward pass: H1 = relu(M @ psi @ W0), Z = M @ H1 @ W1 with M the
symmetrically normalized adjacency (or the identity for the
no-propagation baseline). Pair scores are logistic(z_i . z_j) and the loss
is mean binary cross-entropy. The backward pass is fully analytic,
including the flow through the signal matrix into the mixture logits.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .features import (
    FeatureMatrix,
    MixtureParams,
    logistic,
    mixture_backward,
    mixture_features,
    standardize_backward,
)

BCE_CLAMP = 1e-7

DEFAULT_HIDDEN1 = 100
DEFAULT_HIDDEN2 = 10


class ModelError(ValueError):
    """Invalid model inputs (non-finite matrices, stale caches, bad files)."""


@dataclass
class ModelParams:
    """Trainable parameters: two encoder layers plus the mixture logits."""

    w0: np.ndarray  # C x h1, group-lasso target
    w1: np.ndarray  # h1 x h2
    mixture: MixtureParams

    @classmethod
    def init_glorot(
        cls,
        n_concepts: int,
        h1: int = DEFAULT_HIDDEN1,
        h2: int = DEFAULT_HIDDEN2,
        seed: int = 0,
    ) -> "ModelParams":
        rng = np.random.default_rng(seed)
        return cls(
            w0=_glorot(rng, n_concepts, h1),
            w1=_glorot(rng, h1, h2),
            mixture=MixtureParams.zeros(n_concepts),
        )

    def copy(self) -> "ModelParams":
        return ModelParams(self.w0.copy(), self.w1.copy(), self.mixture.copy())

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.w0.shape[0], self.w0.shape[1], self.w1.shape[1])


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class ForwardCache:
    """Intermediate activations kept for the backward pass."""

    psi: np.ndarray
    pre1: np.ndarray  # M @ psi @ W0, before the ReLU
    h1: np.ndarray  # post-ReLU
    z: np.ndarray  # node embeddings
    mpsi: np.ndarray  # M @ psi
    mh1: np.ndarray  # M @ h1
    fingerprint: tuple


@dataclass
class Gradients:
    """Gradients of the mean pair BCE with respect to all trainable parameters."""

    w0: np.ndarray
    w1: np.ndarray
    beta_logits: np.ndarray
    gamma_logits: np.ndarray


def _check_finite(name: str, m) -> None:
    data = m.data if sp.issparse(m) else m
    if not np.all(np.isfinite(data)):
        raise ModelError(f"non-finite values in {name}")


def _fingerprint(psi: np.ndarray, params: ModelParams) -> tuple:
    return (
        psi.shape,
        float(psi.sum()),
        params.w0.shape,
        float(params.w0.sum()),
        params.w1.shape,
        float(params.w1.sum()),
    )


def encode(norm_adj, psi: FeatureMatrix | np.ndarray, params: ModelParams) -> ForwardCache:
    """Run the encoder; `norm_adj` is a matrix (normalized adjacency or identity)."""
    x = psi.psi if isinstance(psi, FeatureMatrix) else psi
    m = norm_adj.matrix if hasattr(norm_adj, "matrix") else norm_adj
    _check_finite("psi", x)
    _check_finite("norm_adj", m)
    _check_finite("w0", params.w0)
    _check_finite("w1", params.w1)
    mpsi = np.asarray(m @ x)
    pre1 = mpsi @ params.w0
    h1 = np.maximum(pre1, 0.0)
    mh1 = np.asarray(m @ h1)
    z = mh1 @ params.w1
    return ForwardCache(
        psi=x,
        pre1=pre1,
        h1=h1,
        z=z,
        mpsi=mpsi,
        mh1=mh1,
        fingerprint=_fingerprint(x, params),
    )


def decode_pairs(z: np.ndarray, pairs) -> np.ndarray:
    """Edge probabilities logistic(z_i . z_j) for the requested node pairs."""
    idx = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    logits = np.einsum("pd,pd->p", z[idx[:, 0]], z[idx[:, 1]])
    return logistic(logits)


def bce_loss(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probability clamping before the logs."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ModelError(
            f"scores/labels length mismatch: {scores.shape} vs {labels.shape}"
        )
    p = np.clip(scores, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


def backward(
    cache: ForwardCache,
    pairs,
    labels: np.ndarray,
    norm_adj,
    params: ModelParams,
    counts: np.ndarray | None = None,
    framing: np.ndarray | None = None,
    variant: str = "mixed",
    standardize: bool = False,
) -> Gradients:
    """Exact gradients of the mean pair BCE over `pairs`.

    When `counts` and `framing` are given, the gradient flows through the
    signal matrix into the mixture logits; otherwise those gradients are zero.
    `standardize` must match the flag used to build the encoder input, so the
    mixture gradient is pulled back through the per-column standardization.
    """
    if cache.fingerprint != _fingerprint(cache.psi, params):
        raise ModelError("stale forward cache: parameters changed since encode")
    m = norm_adj.matrix if hasattr(norm_adj, "matrix") else norm_adj
    idx = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    labels = np.asarray(labels, dtype=np.float64)
    n_pairs = idx.shape[0]
    scores = decode_pairs(cache.z, idx)
    # d(mean BCE)/d(logit) = (p - y) / n; exact for the clamped loss except in
    # the clamp region, where the loss is constant in p but we keep the
    # unclamped subgradient (clamping only guards the logs numerically).
    g = (scores - labels) / n_pairs
    dz = np.zeros_like(cache.z)
    np.add.at(dz, idx[:, 0], g[:, None] * cache.z[idx[:, 1]])
    np.add.at(dz, idx[:, 1], g[:, None] * cache.z[idx[:, 0]])

    dw1 = cache.mh1.T @ dz
    dh1 = np.asarray(m @ dz) @ params.w1.T  # M is symmetric
    dpre1 = dh1 * (cache.pre1 > 0)
    dw0 = cache.mpsi.T @ dpre1
    if counts is not None and framing is not None:
        dpsi = np.asarray(m @ dpre1) @ params.w0.T
        if standardize:
            raw = mixture_features(counts, framing, params.mixture, variant=variant).psi
            dpsi = standardize_backward(dpsi, raw)
        dbeta, dgamma = mixture_backward(dpsi, counts, framing, params.mixture, variant)
    else:
        dbeta = np.zeros_like(params.mixture.beta_logits)
        dgamma = np.zeros_like(params.mixture.gamma_logits)
    return Gradients(w0=dw0, w1=dw1, beta_logits=dbeta, gamma_logits=dgamma)


def forward_loss(
    norm_adj,
    counts: np.ndarray,
    framing: np.ndarray,
    params: ModelParams,
    pairs,
    labels,
    variant: str = "mixed",
    standardize: bool = False,
) -> tuple[float, ForwardCache]:
    """Convenience: build psi for the variant, encode, decode and score."""
    fm = mixture_features(
        counts, framing, params.mixture, variant=variant,
        standardize_columns=standardize,
    )
    cache = encode(norm_adj, fm, params)
    scores = decode_pairs(cache.z, pairs)
    return bce_loss(scores, np.asarray(labels, dtype=np.float64)), cache


# ---------------------------------------------------------------------------
# Checkpoints: JSON manifest plus row-major float64 blobs


def save_checkpoint(
    dirpath: str | Path,
    params: ModelParams,
    seed: int,
    node_names=None,
    concepts=None,
    embeddings: np.ndarray | None = None,
    extra: dict | None = None,
) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    arrays = {
        "w0": params.w0,
        "w1": params.w1,
        "beta_logits": params.mixture.beta_logits,
        "gamma_logits": params.mixture.gamma_logits,
    }
    if embeddings is not None:
        arrays["embeddings"] = embeddings
    manifest: dict = {"seed": seed, "shapes": {}}
    if node_names is not None:
        manifest["nodes"] = list(node_names)
    if concepts is not None:
        manifest["concepts"] = list(concepts)
    if extra:
        manifest["extra"] = extra
    for name, arr in arrays.items():
        blob = np.ascontiguousarray(arr, dtype=np.float64)
        (d / f"{name}.bin").write_bytes(blob.tobytes())
        manifest["shapes"][name] = list(blob.shape)
    (d / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))


def load_checkpoint(dirpath: str | Path) -> dict:
    """Load a checkpoint directory; returns params, seed and optional metadata."""
    d = Path(dirpath)
    manifest_path = d / "manifest.json"
    if not manifest_path.is_file():
        raise ModelError(f"missing manifest.json in {d}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed checkpoint manifest: {exc}") from exc
    if "shapes" not in manifest or "seed" not in manifest:
        raise ModelError("checkpoint manifest must record shapes and seed")
    arrays = {}
    for name, shape in manifest["shapes"].items():
        blob_path = d / f"{name}.bin"
        if not blob_path.is_file():
            raise ModelError(f"missing checkpoint blob {blob_path}")
        flat = np.frombuffer(blob_path.read_bytes(), dtype=np.float64)
        expected = int(np.prod(shape)) if shape else 1
        if flat.size != expected:
            raise ModelError(f"blob {name} has {flat.size} values, expected {expected}")
        arrays[name] = flat.reshape(shape).copy()
    params = ModelParams(
        w0=arrays["w0"],
        w1=arrays["w1"],
        mixture=MixtureParams(arrays["beta_logits"], arrays["gamma_logits"]),
    )
    return {
        "params": params,
        "seed": int(manifest["seed"]),
        "nodes": manifest.get("nodes"),
        "concepts": manifest.get("concepts"),
        "embeddings": arrays.get("embeddings"),
        "extra": manifest.get("extra"),
    }
