"""Node-by-concept signal matrices built from concept frequencies and moral framing.

The signal for a concept mixes two ingredients: its relative frequency per
node (agenda) and a learnable convex combination of its per-foundation framing
projections. Both mixture levels are parameterized by unconstrained logits so
the whole model stays trainable with plain first-order steps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FOUNDATIONS = (
    "care/harm",
    "fairness/cheating",
    "loyalty/betrayal",
    "authority/subversion",
    "sanctity/degradation",
)
N_FOUNDATIONS = len(FOUNDATIONS)

# Gamma values at or beyond these are reported as hard endpoint decisions.
GAMMA_ENDPOINT_LO = 0.01
GAMMA_ENDPOINT_HI = 0.99


class FeatureError(ValueError):
    """Invalid feature bundle contents or feature directory."""


@dataclass(frozen=True)
class FeatureBundle:
    """Per-node concept counts and framing projections.

    counts: V x C non-negative integers; framing: V x C x 5 cosines in [-1, 1].
    """

    node_names: tuple[str, ...]
    concepts: tuple[str, ...]
    counts: np.ndarray
    framing: np.ndarray
    foundation_names: tuple[str, ...] = FOUNDATIONS

    def __post_init__(self):
        v, c = len(self.node_names), len(self.concepts)
        if self.counts.shape != (v, c):
            raise FeatureError(f"counts shape {self.counts.shape} != ({v}, {c})")
        if self.framing.shape != (v, c, N_FOUNDATIONS):
            raise FeatureError(
                f"framing shape {self.framing.shape} != ({v}, {c}, {N_FOUNDATIONS})"
            )
        if self.foundation_names != FOUNDATIONS:
            raise FeatureError("foundation names/order must match the fixed set")
        if np.any(self.counts < 0):
            raise FeatureError("counts must be non-negative")
        if not np.issubdtype(self.counts.dtype, np.integer):
            raise FeatureError("counts must be integral")
        if np.any(np.abs(self.framing) > 1.0 + 1e-12):
            raise FeatureError("framing projections must lie in [-1, 1]")
        if not np.all(np.isfinite(self.framing)):
            raise FeatureError("framing projections must be finite")

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    @property
    def n_concepts(self) -> int:
        return len(self.concepts)


@dataclass
class MixtureParams:
    """Unconstrained logits for the per-concept mixtures.

    beta(c) = softmax(beta_logits[c]) lives on the 5-simplex;
    gamma(c) = logistic(gamma_logits[c]) lies in (0, 1).
    """

    beta_logits: np.ndarray  # C x 5
    gamma_logits: np.ndarray  # C

    @classmethod
    def zeros(cls, n_concepts: int) -> "MixtureParams":
        # Uniform beta, gamma = 0.5: unbiased start between the two signals.
        return cls(
            beta_logits=np.zeros((n_concepts, N_FOUNDATIONS)),
            gamma_logits=np.zeros(n_concepts),
        )

    def beta(self) -> np.ndarray:
        return softmax_rows(self.beta_logits)

    def gamma(self) -> np.ndarray:
        return logistic(self.gamma_logits)

    def copy(self) -> "MixtureParams":
        return MixtureParams(self.beta_logits.copy(), self.gamma_logits.copy())


@dataclass(frozen=True)
class FeatureMatrix:
    """V x C signal matrix with the variant that produced it."""

    psi: np.ndarray
    provenance: str  # "agenda", "framing" or "mixed"


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def logistic(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def agenda_matrix(counts: np.ndarray) -> np.ndarray:
    """Relative concept frequency per node; all-zero rows map to all zeros."""
    totals = counts.sum(axis=1, keepdims=True).astype(np.float64)
    safe = np.where(totals > 0, totals, 1.0)
    return counts / safe


def framing_scalar(framing: np.ndarray, params: MixtureParams) -> np.ndarray:
    """Per-concept convex combination of framing projections: sum_k beta_k s_k."""
    beta = params.beta()  # C x 5
    return np.einsum("vck,ck->vc", framing, beta)


def mixture_features(
    counts: np.ndarray,
    framing: np.ndarray,
    params: MixtureParams,
    variant: str = "mixed",
    standardize_columns: bool = False,
) -> FeatureMatrix:
    """Assemble the signal matrix for a variant.

    "mixed": u = gamma * a + (1 - gamma) * f; "agenda": u = a (gamma forced to 1);
    "framing": u = f (gamma forced to 0). Column standardization is off by
    default; signals pass through unscaled.
    """
    a = agenda_matrix(counts)
    if variant == "agenda":
        psi = a
    else:
        f = framing_scalar(framing, params)
        if variant == "framing":
            psi = f
        elif variant == "mixed":
            gamma = params.gamma()
            psi = gamma[None, :] * a + (1.0 - gamma)[None, :] * f
        else:
            raise FeatureError(f"unknown feature variant {variant!r}")
    if standardize_columns:
        mu = psi.mean(axis=0, keepdims=True)
        sd = psi.std(axis=0, keepdims=True)
        psi = (psi - mu) / np.where(sd > 0, sd, 1.0)
    return FeatureMatrix(psi=psi, provenance=variant)


def standardize_backward(dpsi_std: np.ndarray, psi_raw: np.ndarray) -> np.ndarray:
    """Pull a gradient back through per-column standardization of psi_raw.

    For y = (x - mean(x)) / std(x) per column, the exact adjoint is
    dx = (dy - mean(dy) - y * mean(dy * y)) / std(x); zero-variance columns
    pass through unscaled (they were only centered).
    """
    mu = psi_raw.mean(axis=0, keepdims=True)
    sd = psi_raw.std(axis=0, keepdims=True)
    safe = np.where(sd > 0, sd, 1.0)
    y = (psi_raw - mu) / safe
    centered = dpsi_std - dpsi_std.mean(axis=0, keepdims=True)
    return (centered - y * (dpsi_std * y).mean(axis=0, keepdims=True)) / safe


def mixture_backward(
    dpsi: np.ndarray,
    counts: np.ndarray,
    framing: np.ndarray,
    params: MixtureParams,
    variant: str = "mixed",
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of a loss with respect to the mixture logits given dL/dpsi.

    For the "agenda" variant both logits are unused and get zero gradients;
    for "framing" only the beta logits receive gradient.
    """
    dbeta_logits = np.zeros_like(params.beta_logits)
    dgamma_logits = np.zeros_like(params.gamma_logits)
    if variant == "agenda":
        return dbeta_logits, dgamma_logits

    beta = params.beta()
    if variant == "mixed":
        gamma = params.gamma()
        a = agenda_matrix(counts)
        f = framing_scalar(framing, params)
        # du/dgamma_c = a - f; chain through the logistic.
        dgamma = np.einsum("vc,vc->c", dpsi, a - f)
        dgamma_logits = dgamma * gamma * (1.0 - gamma)
        df_weight = (1.0 - gamma)[None, :]
    elif variant == "framing":
        df_weight = np.ones((1, counts.shape[1]))
    else:
        raise FeatureError(f"unknown feature variant {variant!r}")

    # dL/dbeta_ck = sum_v dpsi_vc * w_c * s_vck, then through the softmax Jacobian.
    dbeta = np.einsum("vc,vck->ck", dpsi * df_weight, framing)
    inner = (dbeta * beta).sum(axis=1, keepdims=True)
    dbeta_logits = beta * (dbeta - inner)
    return dbeta_logits, dgamma_logits


# ---------------------------------------------------------------------------
# Feature directory format (shared with the corpus tooling)


def save_feature_dir(bundle: FeatureBundle, dirpath: str | Path) -> None:
    """Write manifest.json, counts.tsv and framing_k.tsv for k = 0..4."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "nodes": list(bundle.node_names),
        "concepts": list(bundle.concepts),
        "foundations": list(bundle.foundation_names),
    }
    (d / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))
    _write_tsv(d / "counts.tsv", bundle.counts, fmt="%d")
    for k in range(N_FOUNDATIONS):
        _write_tsv(d / f"framing_{k}.tsv", bundle.framing[:, :, k], fmt="%r")


def load_feature_dir(dirpath: str | Path) -> FeatureBundle:
    """Load and validate a feature directory."""
    d = Path(dirpath)
    manifest_path = d / "manifest.json"
    if not manifest_path.is_file():
        raise FeatureError(f"missing manifest.json in {d}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FeatureError(f"malformed manifest.json: {exc}") from exc
    for key in ("nodes", "concepts", "foundations"):
        if key not in manifest:
            raise FeatureError(f"manifest.json missing key {key!r}")
    nodes = tuple(manifest["nodes"])
    concepts = tuple(manifest["concepts"])
    if tuple(manifest["foundations"]) != FOUNDATIONS:
        raise FeatureError("manifest foundations must match the fixed set")
    v, c = len(nodes), len(concepts)
    counts = _read_tsv(d / "counts.tsv", v, c)
    if np.any(counts != np.round(counts)):
        raise FeatureError("counts.tsv must contain integers")
    framing = np.stack(
        [_read_tsv(d / f"framing_{k}.tsv", v, c) for k in range(N_FOUNDATIONS)],
        axis=2,
    )
    return FeatureBundle(
        node_names=nodes,
        concepts=concepts,
        counts=counts.astype(np.int64),
        framing=framing,
    )


def _write_tsv(path: Path, matrix: np.ndarray, fmt: str) -> None:
    with open(path, "w") as fh:
        for row in matrix:
            if fmt == "%d":
                fh.write("\t".join(str(int(x)) for x in row))
            else:
                fh.write("\t".join(repr(float(x)) for x in row))
            fh.write("\n")


def _read_tsv(path: Path, v: int, c: int) -> np.ndarray:
    if not path.is_file():
        raise FeatureError(f"missing feature file {path}")
    try:
        matrix = np.loadtxt(path, delimiter="\t", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise FeatureError(f"malformed feature file {path}: {exc}") from exc
    if matrix.shape != (v, c):
        raise FeatureError(f"{path} has shape {matrix.shape}, expected ({v}, {c})")
    return matrix
