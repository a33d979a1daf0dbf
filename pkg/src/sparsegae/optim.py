"""Training loop: Adam on the prediction loss plus proximal group-lasso steps.

The group-lasso penalty acts on rows of the input weight matrix, so a zeroed
row removes its concept from the model. Because Adam rescales each coordinate,
the proximal step must use the weighted proximal operator of the l1/l2 norm,
solved per row by Newton-Raphson on a scalar equation; with uniform weights it
reduces to closed-form block soft-thresholding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import graphcore
from .features import (
    GAMMA_ENDPOINT_HI,
    GAMMA_ENDPOINT_LO,
    FeatureBundle,
    mixture_features,
)
from .gae import ModelParams, backward, bce_loss, decode_pairs, encode
from .metrics import evaluate_pairs

LEARNING_RATE_GRID = (1e-4, 3e-4, 1e-3, 3e-3)
LAMBDA_GRID = (1e-4, 3e-4, 1e-3, 3e-3)
MAX_EPOCHS = 1000
DEFAULT_THETA = 150

VARIANTS = ("AF-SGAE", "A-SGAE", "F-SGAE", "AF-SLAE")

# Feature mixture and adjacency propagation per model variant.
_VARIANT_TABLE = {
    "AF-SGAE": ("mixed", True),
    "A-SGAE": ("agenda", True),
    "F-SGAE": ("framing", True),
    "AF-SLAE": ("mixed", False),
}


class OptimError(ValueError):
    pass


class ProxConvergenceError(OptimError):
    """Newton-Raphson failed to reach tolerance within the iteration budget."""


class TrainingDivergedError(OptimError):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


class InfeasibleSparsityError(OptimError):
    """No sweep cell produced a model within the sparsity cap."""

    def __init__(self, theta: int, closest: int):
        super().__init__(
            f"no model satisfies the sparsity cap theta={theta}; "
            f"closest achieved |C*|={closest}"
        )
        self.theta = theta
        self.closest = closest


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    lam: float = 1e-3
    theta: int = DEFAULT_THETA
    variant: str = "AF-SGAE"
    seed: int = 0
    hidden1: int = 100
    hidden2: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    prox_newton_max_iter: int = 100
    prox_newton_tol: float = 1e-10
    zero_row_tol: float = 1e-12
    standardize: bool = False  # per-column psi standardization
    # Keep the frozen dev/test negatives out of the per-epoch training
    # resamples. Off by default: training negatives are drawn from all
    # non-edges. Turn on for variant comparisons so no model can gain by
    # fitting the evaluation pairs directly.
    exclude_eval_negatives: bool = False
    sgd_prox: bool = False  # test hook: plain SGD step + closed-form prox

    def __post_init__(self):
        if self.variant not in _VARIANT_TABLE:
            raise OptimError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.lam < 0:
            raise OptimError("lambda must be >= 0")
        if self.theta < 0:
            raise OptimError("theta must be >= 0")
        if not 1 <= self.epochs <= MAX_EPOCHS:
            raise OptimError(f"epochs must lie in [1, {MAX_EPOCHS}]")


@dataclass
class BestCheckpoint:
    epoch: int
    params: ModelParams
    dev_auc: float
    dev_ap: float
    n_active: int


@dataclass
class TrainedModel:
    params: ModelParams
    history: list
    active_concepts: list
    config: TrainConfig
    best: BestCheckpoint | None = None
    min_active_seen: int | None = None


def group_lasso_penalty(w0: np.ndarray) -> float:
    """Sum of row l2 norms (the l1 norm of the row l2 norms)."""
    return float(np.sqrt((w0 * w0).sum(axis=1)).sum())


def prox_group_row(
    row: np.ndarray,
    threshold: float,
    diag: np.ndarray | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> np.ndarray:
    """Weighted proximal operator of t * ||.||_2 for a single row.

    With uniform weights this is the closed-form block soft-threshold
    max(0, 1 - t/||row||) * row. With per-coordinate weights d > 0 the
    effective threshold is t * d_i per coordinate and the solution
    x_i = row_i * nu / (nu + t * d_i) requires the scalar root nu of
    sum_i row_i^2 / (nu + t*d_i)^2 = 1, found by Newton-Raphson. The
    annihilation condition sum_i row_i^2 / (t*d_i)^2 <= 1 yields exact zeros.
    """
    row = np.asarray(row, dtype=np.float64)
    if threshold < 0:
        raise OptimError("threshold must be >= 0")
    if threshold == 0:
        return row.copy()
    if diag is None:
        norm = float(np.linalg.norm(row))
        if norm <= threshold:
            return np.zeros_like(row)
        return (1.0 - threshold / norm) * row

    d = np.asarray(diag, dtype=np.float64)
    if np.any(d <= 0):
        raise OptimError("diag weights must be > 0")
    td = threshold * d
    w_sq = row * row
    if w_sq.sum() == 0.0 or float((w_sq / (td * td)).sum()) <= 1.0:
        return np.zeros_like(row)
    # g(nu) = sum w^2/(nu+td)^2 - 1 is convex and decreasing with g(0) > 0 and
    # g(||row||) <= 0, so Newton from nu=0 converges monotonically to the root.
    nu = 0.0
    for _ in range(max_iter):
        denom = nu + td
        g = float((w_sq / (denom * denom)).sum()) - 1.0
        if abs(g) <= tol:
            return row * (nu / (nu + td))
        gprime = -2.0 * float((w_sq / (denom * denom * denom)).sum())
        nu = nu - g / gprime
    raise ProxConvergenceError(
        f"Newton-Raphson did not converge in {max_iter} iterations; residual {g:.3e}"
    )


class _AdamState:
    """Per-parameter first/second moment accumulators with bias correction."""

    def __init__(self, shapes: dict):
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}
        self.t = 0

    def step(self, grads: dict, lr: float, b1: float, b2: float, eps: float) -> dict:
        """Return the update (to subtract) per parameter; also exposes vhat."""
        self.t += 1
        updates = {}
        self.vhat = {}
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            mhat = self.m[k] / (1 - b1**self.t)
            vhat = self.v[k] / (1 - b2**self.t)
            self.vhat[k] = vhat
            updates[k] = lr * mhat / (np.sqrt(vhat) + eps)
        return updates


def _active_rows(w0: np.ndarray, tol: float) -> np.ndarray:
    return np.where(np.sqrt((w0 * w0).sum(axis=1)) > tol)[0]


def train(
    graph: graphcore.Graph,
    bundle: FeatureBundle,
    split: graphcore.EdgeSplit,
    config: TrainConfig,
    track_best_theta: int | None = None,
) -> TrainedModel:
    """Full-batch training with per-epoch negative resampling and prox steps.

    Each epoch: resample balanced training negatives, take one Adam step on the
    prediction loss, then apply the weighted proximal operator to every row of
    the input weight matrix. Deterministic for a fixed seed and config.

    When `track_best_theta` is given, the best dev-AUC parameters among epochs
    whose active-concept count satisfies the cap are snapshotted (the epoch
    grid search realized as checkpoints over one run).
    """
    feature_variant, propagate = _VARIANT_TABLE[config.variant]
    counts, framing = bundle.counts, bundle.framing
    n_concepts = bundle.n_concepts
    if propagate:
        norm_adj = graphcore.normalized_adjacency(graph).matrix
    else:
        norm_adj = np.eye(graph.n_nodes)

    params = ModelParams.init_glorot(
        n_concepts, config.hidden1, config.hidden2, seed=config.seed
    )
    adam = _AdamState(
        {
            "w0": params.w0.shape,
            "w1": params.w1.shape,
            "beta_logits": params.mixture.beta_logits.shape,
            "gamma_logits": params.mixture.gamma_logits.shape,
        }
    )
    rng = np.random.default_rng(config.seed)
    train_pos = list(split.train_edges)
    dev_pos = list(split.dev_edges)
    dev_neg = list(split.dev_negatives)
    eval_negatives: set = set()
    if config.exclude_eval_negatives:
        eval_negatives = set(map(tuple, split.dev_negatives)) | set(
            map(tuple, split.test_negatives)
        )
    history = []
    best: BestCheckpoint | None = None
    min_active = n_concepts

    for epoch in range(1, config.epochs + 1):
        negatives = graphcore.sample_negatives(
            graph, len(train_pos), seed=int(rng.integers(2**31)),
            exclude=eval_negatives,
        )
        pairs = train_pos + negatives
        labels = np.array([1.0] * len(train_pos) + [0.0] * len(negatives))

        fm = mixture_features(
            counts, framing, params.mixture, variant=feature_variant,
            standardize_columns=config.standardize,
        )
        cache = encode(norm_adj, fm, params)
        scores = decode_pairs(cache.z, pairs)
        loss_pred = bce_loss(scores, labels)
        if not np.isfinite(loss_pred):
            raise TrainingDivergedError(epoch)
        grads = backward(
            cache, pairs, labels, norm_adj, params,
            counts=counts, framing=framing, variant=feature_variant,
            standardize=config.standardize,
        )

        if config.sgd_prox:
            params.w0 -= config.learning_rate * grads.w0
            params.w1 -= config.learning_rate * grads.w1
            params.mixture.beta_logits -= config.learning_rate * grads.beta_logits
            params.mixture.gamma_logits -= config.learning_rate * grads.gamma_logits
            w0_diag = None
        else:
            updates = adam.step(
                {
                    "w0": grads.w0,
                    "w1": grads.w1,
                    "beta_logits": grads.beta_logits,
                    "gamma_logits": grads.gamma_logits,
                },
                config.learning_rate,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_eps,
            )
            params.w0 -= updates["w0"]
            params.w1 -= updates["w1"]
            params.mixture.beta_logits -= updates["beta_logits"]
            params.mixture.gamma_logits -= updates["gamma_logits"]
            # Adam's per-coordinate step scaling becomes the prox metric.
            w0_diag = 1.0 / (np.sqrt(adam.vhat["w0"]) + config.adam_eps)

        if config.lam > 0:
            t = config.learning_rate * config.lam
            for j in range(n_concepts):
                params.w0[j] = prox_group_row(
                    params.w0[j],
                    t,
                    diag=None if w0_diag is None else w0_diag[j],
                    max_iter=config.prox_newton_max_iter,
                    tol=config.prox_newton_tol,
                )

        loss_reg = group_lasso_penalty(params.w0)
        active = _active_rows(params.w0, config.zero_row_tol)
        n_active = len(active)
        min_active = min(min_active, n_active)

        fm_eval = mixture_features(
            counts, framing, params.mixture, variant=feature_variant,
            standardize_columns=config.standardize,
        )
        z = encode(norm_adj, fm_eval, params).z
        dev = evaluate_pairs(z, dev_pos, dev_neg)
        history.append(
            {
                "epoch": epoch,
                "loss_pred": loss_pred,
                "loss_reg": loss_reg,
                "loss_total": loss_pred + config.lam * loss_reg,
                "dev_auc": dev.auc,
                "dev_ap": dev.ap,
                "n_active": n_active,
            }
        )
        if track_best_theta is not None and n_active <= track_best_theta:
            key = (dev.auc, -n_active)
            if best is None or key > (best.dev_auc, -best.n_active):
                best = BestCheckpoint(
                    epoch=epoch,
                    params=params.copy(),
                    dev_auc=dev.auc,
                    dev_ap=dev.ap,
                    n_active=n_active,
                )

    return TrainedModel(
        params=params,
        history=history,
        active_concepts=list(map(int, _active_rows(params.w0, config.zero_row_tol))),
        config=config,
        best=best,
        min_active_seen=min_active,
    )


@dataclass
class SweepResult:
    best_model: TrainedModel
    best_cell: dict
    leaderboard: list
    theta: int
    histories: list  # per cell: learning_rate, lambda, per-epoch history


def sweep(
    graph: graphcore.Graph,
    bundle: FeatureBundle,
    split: graphcore.EdgeSplit,
    theta: int = DEFAULT_THETA,
    seed: int = 0,
    learning_rates=LEARNING_RATE_GRID,
    lambdas=LAMBDA_GRID,
    epochs: int = MAX_EPOCHS,
    variant: str = "AF-SGAE",
    base_config: TrainConfig | None = None,
    jobs: int = 1,
) -> SweepResult:
    """Grid search over (epochs, learning rate, lambda) under the sparsity cap.

    The epoch dimension is realized as per-epoch checkpoints within a single
    run per (learning rate, lambda) cell. Models whose active-concept count
    exceeds theta are discarded; the survivor with the best dev AUC wins, ties
    broken by smaller |C*|, then smaller lambda.
    """
    if not learning_rates or not lambdas:
        raise OptimError("sweep grids must be non-empty")
    base = base_config or TrainConfig()
    cells = [
        (float(lr), float(lam))
        for lr in sorted(learning_rates)
        for lam in sorted(lambdas)
    ]

    def run_cell(cell):
        lr, lam = cell
        config = replace(
            base,
            learning_rate=lr,
            lam=lam,
            epochs=epochs,
            variant=variant,
            seed=seed,
            theta=theta,
        )
        return train(graph, bundle, split, config, track_best_theta=theta)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            models = list(pool.map(run_cell, cells))
    else:
        models = [run_cell(c) for c in cells]

    leaderboard = []
    best_model = None
    best_cell = None
    best_key = None
    closest = None
    for (lr, lam), model in zip(cells, models):
        entry = {
            "learning_rate": lr,
            "lambda": lam,
            "variant": variant,
            "seed": seed,
            "min_active_seen": model.min_active_seen,
        }
        if model.best is None:
            entry["admissible"] = False
            closest = (
                model.min_active_seen
                if closest is None
                else min(closest, model.min_active_seen)
            )
        else:
            b = model.best
            entry.update(
                admissible=True,
                epoch=b.epoch,
                dev_auc=b.dev_auc,
                dev_ap=b.dev_ap,
                n_active=b.n_active,
            )
            key = (b.dev_auc, -b.n_active, -lam)
            if best_key is None or key > best_key:
                best_key = key
                best_model = model
                best_cell = entry
        leaderboard.append(entry)

    if best_model is None:
        raise InfeasibleSparsityError(theta, closest if closest is not None else -1)
    histories = [
        {"learning_rate": lr, "lambda": lam, "history": model.history}
        for (lr, lam), model in zip(cells, models)
    ]
    return SweepResult(
        best_model=best_model,
        best_cell=best_cell,
        leaderboard=leaderboard,
        theta=theta,
        histories=histories,
    )


# ---------------------------------------------------------------------------
# Analysis of the surviving concepts


@dataclass
class SparsityReport:
    variant: str
    concepts: list  # per surviving concept, ordered by concept index
    gamma_histogram: dict
    dominant_tally_pct: dict
    beta_rank_curve: list  # mean beta per rank across surviving concepts
    framing_strengths: dict  # concept -> per-node |s_k| for the dominant k


def analyze_model(model: TrainedModel, bundle: FeatureBundle) -> SparsityReport:
    """Analyze a trained model (its best checkpoint when one was tracked)."""
    params = model.best.params if model.best is not None else model.params
    return analyze(
        params, model.config.variant, bundle, zero_row_tol=model.config.zero_row_tol
    )


def analyze(
    params: ModelParams,
    variant: str,
    bundle: FeatureBundle,
    zero_row_tol: float = 1e-12,
) -> SparsityReport:
    """Report mixture decisions and framing strengths for the surviving concepts.

    Concepts are listed in index order; signal values are never compared
    across concepts (they are only meaningful across nodes).
    """
    if variant not in _VARIANT_TABLE:
        raise OptimError(f"unknown variant {variant!r}")
    active = list(map(int, _active_rows(params.w0, zero_row_tol)))
    feature_variant, _ = _VARIANT_TABLE[variant]

    beta = params.mixture.beta()
    if feature_variant == "agenda":
        gamma = np.ones(bundle.n_concepts)
    elif feature_variant == "framing":
        gamma = np.zeros(bundle.n_concepts)
    else:
        gamma = params.mixture.gamma()

    foundations = bundle.foundation_names
    rows = []
    histogram = {"agenda_endpoint": 0, "framing_endpoint": 0, "interior": 0}
    tally = {name: 0 for name in foundations}
    rank_values = []
    strengths = {}
    for j in active:
        g = float(gamma[j])
        if g >= GAMMA_ENDPOINT_HI:
            gamma_class = "agenda"
            histogram["agenda_endpoint"] += 1
        elif g <= GAMMA_ENDPOINT_LO:
            gamma_class = "framing"
            histogram["framing_endpoint"] += 1
        else:
            gamma_class = "mixed"
            histogram["interior"] += 1
        order = np.argsort(-beta[j], kind="stable")
        dominant = int(order[0])
        tally[foundations[dominant]] += 1
        rank_values.append(beta[j][order])
        concept = bundle.concepts[j]
        rows.append(
            {
                "index": j,
                "concept": concept,
                "gamma": g,
                "gamma_class": gamma_class,
                "beta": [float(x) for x in beta[j]],
                "beta_sorted": [
                    [foundations[int(k)], float(beta[j][k])] for k in order
                ],
                "dominant_foundation": foundations[dominant],
                "dominant_beta": float(beta[j][dominant]),
            }
        )
        strengths[concept] = [
            float(abs(x)) for x in bundle.framing[:, j, dominant]
        ]

    n = len(active)
    tally_pct = {
        name: (100.0 * count / n if n else 0.0) for name, count in tally.items()
    }
    rank_curve = (
        [float(x) for x in np.mean(rank_values, axis=0)] if rank_values else []
    )
    return SparsityReport(
        variant=variant,
        concepts=rows,
        gamma_histogram=histogram,
        dominant_tally_pct=tally_pct,
        beta_rank_curve=rank_curve,
        framing_strengths=strengths,
    )
