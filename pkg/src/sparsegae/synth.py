"""Planted-polarization benchmark generator and recovery scoring.

Generates a stochastic block model graph together with a feature bundle in
which a chosen subset of concepts carries block-dependent signal (in counts,
framing projections, or both) while the rest is block-independent noise.
Everything flows through the same file formats as real data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import N_FOUNDATIONS, FeatureBundle
from .graphcore import Graph, build_graph

# Block-conditional Poisson means for concept counts.
COUNT_NOISE_MEAN = 10.0
COUNT_SIGNAL_HI = 40.0
COUNT_SIGNAL_LO = 4.0
# Block-conditional framing means (clipped to [-1, 1] after noise).
FRAMING_SIGNAL_MEAN = 0.8

MAX_GENERATION_ATTEMPTS = 10


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedConfig:
    n_nodes: int = 60
    n_blocks: int = 2
    p_in: float = 0.5
    p_out: float = 0.05
    n_concepts: int = 50
    n_informative: int = 10
    signal_kinds: tuple[str, ...] | None = None  # "agenda", "framing:K", "mixed"
    noise_std: float = 0.1
    spectral_scale: float = 0.5
    count_signal_hi: float = COUNT_SIGNAL_HI
    count_signal_lo: float = COUNT_SIGNAL_LO
    framing_signal_mean: float = FRAMING_SIGNAL_MEAN
    seed: int = 0

    def __post_init__(self):
        if not self.p_in > self.p_out:
            raise SynthError("p_in must exceed p_out")
        if self.n_informative > self.n_concepts:
            raise SynthError("n_informative must not exceed n_concepts")
        if self.signal_kinds is not None and len(self.signal_kinds) != self.n_informative:
            raise SynthError("signal_kinds must have one entry per informative concept")

    def resolved_kinds(self) -> tuple[str, ...]:
        if self.signal_kinds is not None:
            return self.signal_kinds
        cycle = ["agenda", "framing:2", "mixed", "framing:4", "agenda"]
        return tuple(cycle[k % len(cycle)] for k in range(self.n_informative))


@dataclass(frozen=True)
class PlantedTruth:
    blocks: tuple[int, ...]
    informative: dict  # concept index -> (kind, foundation index or None)


@dataclass(frozen=True)
class RecoveryMetrics:
    precision: float | None  # None when nothing was selected
    recall: float


def _sbm_edges(cfg: PlantedConfig, rng: np.random.Generator, blocks) -> list:
    edges = []
    for i in range(cfg.n_nodes):
        for j in range(i + 1, cfg.n_nodes):
            p = cfg.p_in if blocks[i] == blocks[j] else cfg.p_out
            if rng.random() < p:
                edges.append((i, j))
    return edges


def _parse_kind(kind: str) -> tuple[str, int | None]:
    if kind == "agenda":
        return "agenda", None
    if kind == "mixed":
        return "mixed", 2  # loyalty/betrayal axis by default
    if kind.startswith("framing:"):
        k = int(kind.split(":", 1)[1])
        if not 0 <= k < N_FOUNDATIONS:
            raise SynthError(f"foundation index out of range in {kind!r}")
        return "framing", k
    raise SynthError(f"unknown signal kind {kind!r}")


def generate_planted(cfg: PlantedConfig) -> tuple[Graph, FeatureBundle, PlantedTruth]:
    """Generate (graph, features, truth) for a planted configuration.

    Deterministic per seed. Regenerates up to 10 times when the sampled graph
    comes out too sparse to be usable (fewer than 5 edges).
    """
    rng = np.random.default_rng(cfg.seed)
    # Balanced round-robin block assignment keeps block sizes within one of
    # each other (and makes the two-4-clique toy exact at p_in=1, p_out=0).
    blocks = tuple(i % cfg.n_blocks for i in range(cfg.n_nodes))
    node_names = tuple(f"node{i:03d}" for i in range(cfg.n_nodes))

    edges = None
    for _ in range(MAX_GENERATION_ATTEMPTS):
        candidate = _sbm_edges(cfg, rng, blocks)
        if len(candidate) >= 5:
            edges = candidate
            break
    if edges is None:
        raise SynthError(
            "could not generate a usable graph in "
            f"{MAX_GENERATION_ATTEMPTS} attempts (p values too extreme)"
        )
    graph = build_graph(node_names, edges)

    kinds = cfg.resolved_kinds()
    informative_idx = rng.choice(cfg.n_concepts, size=cfg.n_informative, replace=False)
    informative = {}
    block_arr = np.asarray(blocks)

    # Tie-level homophily signal: each informative concept also tracks one of
    # the leading spectral coordinates of the realized adjacency, so concept
    # usage reflects who a node actually connects to, not just its block.
    # Block membership alone caps dev AUC near 0.8 when p_in is moderate,
    # since intra-block edges and non-edges are then exchangeable.
    adjacency = np.zeros((cfg.n_nodes, cfg.n_nodes))
    for i, j in edges:
        adjacency[i, j] = adjacency[j, i] = 1.0
    eigvals, eigvecs = np.linalg.eigh(adjacency)
    # Only positive-eigenvalue directions: the inner-product decoder can only
    # express positive semidefinite score matrices.
    leading = np.argsort(-eigvals)[: cfg.n_informative]
    spectral = eigvecs[:, leading]
    spectral_sd = spectral.std(axis=0)
    spectral_sd[spectral_sd == 0] = 1.0
    spectral = spectral / spectral_sd * cfg.spectral_scale

    count_means = np.full((cfg.n_nodes, cfg.n_concepts), COUNT_NOISE_MEAN)
    framing_means = np.zeros((cfg.n_nodes, cfg.n_concepts, N_FOUNDATIONS))
    # Agenda signal separates blocks by parity, framing by block halves. With
    # 2 blocks the two axes coincide; with 4 or more the families become
    # complementary, so neither alone resolves the full partition.
    agenda_hi = block_arr % 2 == 0
    framing_hi = block_arr < (cfg.n_blocks + 1) // 2
    for rank, (idx, kind) in enumerate(zip(informative_idx, kinds)):
        family, foundation = _parse_kind(kind)
        informative[int(idx)] = (family, foundation)
        if family in ("agenda", "mixed"):
            count_means[:, idx] = np.where(
                agenda_hi, cfg.count_signal_hi, cfg.count_signal_lo
            )
            count_means[:, idx] *= np.exp(spectral[:, rank])
        if family in ("framing", "mixed"):
            framing_means[:, idx, foundation] = np.where(
                framing_hi, cfg.framing_signal_mean, -cfg.framing_signal_mean
            )
        # The node-position component colors every foundation equally, so it
        # survives any foundation mixture the model settles on.
        framing_means[:, idx, :] += spectral[:, rank][:, None]

    counts = rng.poisson(count_means).astype(np.int64)
    framing = np.clip(
        framing_means + rng.normal(0.0, cfg.noise_std, size=framing_means.shape),
        -1.0,
        1.0,
    )
    bundle = FeatureBundle(
        node_names=node_names,
        concepts=tuple(f"concept{j:03d}" for j in range(cfg.n_concepts)),
        counts=counts,
        framing=framing,
    )
    truth = PlantedTruth(blocks=blocks, informative=informative)
    return graph, bundle, truth


def recovery_metrics(selected, truth: PlantedTruth) -> RecoveryMetrics:
    """Set precision/recall of selected concepts against the planted set."""
    selected = set(int(s) for s in selected)
    planted = set(truth.informative)
    hits = len(selected & planted)
    precision = hits / len(selected) if selected else None
    recall = hits / len(planted) if planted else 0.0
    return RecoveryMetrics(precision=precision, recall=recall)
