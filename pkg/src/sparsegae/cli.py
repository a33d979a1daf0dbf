"""Command-line entry point wiring the file formats and pipeline stages.

One binary with subcommands; config precedence is CLI flag > config file >
default. All inputs are loaded and validated before any output file is
created, and outputs are byte-identical across reruns with the same seed.

Exit codes: 0 success, 2 usage, 3 missing input file, 4 malformed/invalid
format, 5 infeasible sparsity constraint, 6 training divergence, 1 other.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields as dataclass_fields
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import backbone as bb
from . import dynamics as dyn
from . import graphcore as gc
from . import optim
from .features import FeatureError, load_feature_dir, mixture_features, save_feature_dir
from .gae import ModelError, encode, load_checkpoint, save_checkpoint
from .metrics import MetricError, evaluate_pairs
from .synth import PlantedConfig, SynthError, generate_planted

OUTPUT_ROOT_ENV = "SPARSEGAE_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_FORMAT = 4
EXIT_INFEASIBLE = 5
EXIT_DIVERGED = 6


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _resolve(path: str) -> Path:
    """Resolve a possibly relative path against the output-root env var."""
    p = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _require_file(path: str) -> Path:
    p = _resolve(path)
    if not p.exists():
        raise CliError(EXIT_MISSING_FILE, "missing-file", f"no such file: {p}")
    return p


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1))


def _load_graph(path: str) -> gc.Graph:
    p = _require_file(path)
    try:
        return gc.load_graph(p)
    except (gc.GraphError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_FORMAT, "bad-graph", f"{p}: {exc}") from exc


def _load_features(path: str):
    p = _require_file(path)
    try:
        return load_feature_dir(p)
    except FeatureError as exc:
        raise CliError(EXIT_FORMAT, "bad-features", f"{p}: {exc}") from exc


def _load_split(path: str, graph=None) -> gc.EdgeSplit:
    p = _require_file(path)
    try:
        return gc.load_split(p, graph)
    except (gc.GraphError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_FORMAT, "bad-split", f"{p}: {exc}") from exc


def _load_checkpoint(path: str) -> dict:
    p = _require_file(path)
    try:
        return load_checkpoint(p)
    except ModelError as exc:
        raise CliError(EXIT_FORMAT, "bad-checkpoint", f"{p}: {exc}") from exc


_CONFIG_KEYS = {f.name for f in dataclass_fields(optim.TrainConfig)}


def _build_config(args, defaults: optim.TrainConfig | None = None) -> optim.TrainConfig:
    """Merge defaults, config file, and CLI flags (flags win)."""
    config = defaults or optim.TrainConfig()
    if getattr(args, "config", None):
        p = _require_file(args.config)
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(EXIT_FORMAT, "bad-config", f"{p}: {exc}") from exc
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise CliError(
                EXIT_FORMAT, "bad-config", f"{p}: unknown keys {sorted(unknown)}"
            )
        try:
            config = replace(config, **doc)
        except optim.OptimError as exc:
            raise CliError(EXIT_FORMAT, "bad-config", f"{p}: {exc}") from exc
    overrides = {}
    for flag, key in [
        ("epochs", "epochs"),
        ("learning_rate", "learning_rate"),
        ("lam", "lam"),
        ("theta", "theta"),
        ("variant", "variant"),
        ("seed", "seed"),
        ("standardize", "standardize"),
        ("exclude_eval_negatives", "exclude_eval_negatives"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    try:
        return replace(config, **overrides)
    except optim.OptimError as exc:
        raise CliError(EXIT_FORMAT, "bad-config", str(exc)) from exc


def _checkpoint_of_model(
    out_dir: Path, model: optim.TrainedModel, graph, bundle
) -> None:
    params = model.best.params if model.best is not None else model.params
    config = model.config
    variant_features, propagate = optim._VARIANT_TABLE[config.variant]
    m = (
        gc.normalized_adjacency(graph).matrix
        if propagate
        else np.eye(graph.n_nodes)
    )
    fm = mixture_features(
        bundle.counts,
        bundle.framing,
        params.mixture,
        variant_features,
        standardize_columns=config.standardize,
    )
    z = encode(m, fm, params).z
    save_checkpoint(
        out_dir,
        params,
        seed=config.seed,
        node_names=graph.node_names,
        concepts=bundle.concepts,
        embeddings=z,
        extra={
            "variant": config.variant,
            "zero_row_tol": config.zero_row_tol,
            "standardize": config.standardize,
        },
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_backbone(args) -> int:
    p = _require_file(args.weights)
    try:
        w = bb.load_weighted_tsv(p)
    except bb.BackboneError as exc:
        raise CliError(EXIT_FORMAT, "bad-weights", f"{p}: {exc}") from exc
    deltas = args.deltas if args.deltas else bb.DEFAULT_DELTAS
    graph, report = bb.build_backbone(w, deltas)
    mod = bb.louvain_modularity(graph, seed=args.seed)
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gc.save_graph(graph, out / "graph.json")
    _write_json(
        out / "backbone_report.json",
        {
            "seed": args.seed,
            "delta_used": report.delta_used,
            "degenerate_knee": report.degenerate_knee,
            "knee_curve": [list(c) for c in report.knee_curve],
            "stats": report.stats,
            "modularity_q": mod.q,
            "n_communities": len(set(mod.partition.values())),
        },
    )
    return EXIT_OK


def cmd_split(args) -> int:
    graph = _load_graph(args.graph)
    try:
        split = gc.split_edges(graph, tuple(args.ratios), seed=args.seed)
    except gc.GraphError as exc:
        raise CliError(EXIT_FORMAT, "bad-split-request", str(exc)) from exc
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gc.save_split(split, out)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        cfg = PlantedConfig(
            n_nodes=args.nodes,
            n_blocks=args.blocks,
            p_in=args.p_in,
            p_out=args.p_out,
            n_concepts=args.concepts,
            n_informative=args.informative,
            noise_std=args.noise_std,
            seed=args.seed,
        )
        graph, bundle, truth = generate_planted(cfg)
    except SynthError as exc:
        raise CliError(EXIT_FORMAT, "bad-synth-config", str(exc)) from exc
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gc.save_graph(graph, out / "graph.json")
    save_feature_dir(bundle, out / "features")
    _write_json(
        out / "truth.json",
        {
            "seed": args.seed,
            "blocks": list(truth.blocks),
            "informative": {
                str(k): {"kind": kind, "foundation": foundation}
                for k, (kind, foundation) in sorted(truth.informative.items())
            },
        },
    )
    return EXIT_OK


def cmd_train(args) -> int:
    graph = _load_graph(args.graph)
    bundle = _load_features(args.features)
    split = _load_split(args.split, graph)
    config = _build_config(args)
    model = optim.train(graph, bundle, split, config, track_best_theta=config.theta)
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _checkpoint_of_model(out / "checkpoint", model, graph, bundle)
    _write_json(
        out / "history.json",
        {
            "seed": config.seed,
            "config": _config_doc(config),
            "history": model.history,
            "active_concepts": model.active_concepts,
        },
    )
    return EXIT_OK


def _config_doc(config: optim.TrainConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in dataclass_fields(config)}


def cmd_sweep(args) -> int:
    graph = _load_graph(args.graph)
    bundle = _load_features(args.features)
    split = _load_split(args.split, graph)
    base = _build_config(args)
    result = optim.sweep(
        graph,
        bundle,
        split,
        theta=base.theta,
        seed=base.seed,
        learning_rates=args.learning_rates or optim.LEARNING_RATE_GRID,
        lambdas=args.lambdas or optim.LAMBDA_GRID,
        epochs=args.epochs if args.epochs is not None else optim.MAX_EPOCHS,
        variant=base.variant,
        base_config=base,
        jobs=args.jobs,
    )
    best = result.best_model
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _checkpoint_of_model(out / "best_checkpoint", best, graph, bundle)
    params = best.best.params
    m = _norm_adj_for(best.config, graph)
    fm = mixture_features(
        bundle.counts,
        bundle.framing,
        params.mixture,
        optim._VARIANT_TABLE[best.config.variant][0],
        standardize_columns=best.config.standardize,
    )
    z = encode(m, fm, params).z
    test = evaluate_pairs(z, list(split.test_edges), list(split.test_negatives))
    _write_json(
        out / "leaderboard.json",
        {
            "seed": base.seed,
            "theta": result.theta,
            "variant": base.variant,
            "cells": result.leaderboard,
            "best": dict(
                result.best_cell,
                test_auc=test.auc,
                test_ap=test.ap,
                active_concepts=[
                    int(j)
                    for j in optim._active_rows(params.w0, base.zero_row_tol)
                ],
            ),
        },
    )
    _write_json(
        out / "sweep_history.json",
        {"seed": base.seed, "cells": result.leaderboard, "histories": result.histories},
    )
    return EXIT_OK


def _norm_adj_for(config: optim.TrainConfig, graph):
    _, propagate = optim._VARIANT_TABLE[config.variant]
    return (
        gc.normalized_adjacency(graph).matrix if propagate else np.eye(graph.n_nodes)
    )


def cmd_eval(args) -> int:
    ckpt = _load_checkpoint(args.checkpoint)
    graph = _load_graph(args.graph)
    bundle = _load_features(args.features)
    split = _load_split(args.split, graph)
    extra = ckpt.get("extra") or {}
    variant = extra.get("variant", "AF-SGAE")
    config = optim.TrainConfig(variant=variant, seed=ckpt["seed"])
    m = _norm_adj_for(config, graph)
    fm = mixture_features(
        bundle.counts,
        bundle.framing,
        ckpt["params"].mixture,
        optim._VARIANT_TABLE[variant][0],
        standardize_columns=bool(extra.get("standardize", False)),
    )
    z = encode(m, fm, ckpt["params"]).z
    if args.part == "dev":
        pos, neg = list(split.dev_edges), list(split.dev_negatives)
    else:
        pos, neg = list(split.test_edges), list(split.test_negatives)
    try:
        metrics = evaluate_pairs(z, pos, neg)
    except MetricError as exc:
        raise CliError(EXIT_FORMAT, "bad-eval-part", str(exc)) from exc
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(
        out,
        {
            "seed": ckpt["seed"],
            "part": args.part,
            "variant": variant,
            "auc": metrics.auc,
            "ap": metrics.ap,
            "n_pos": metrics.n_pos,
            "n_neg": metrics.n_neg,
        },
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    ckpt = _load_checkpoint(args.checkpoint)
    bundle = _load_features(args.features)
    extra = ckpt.get("extra") or {}
    variant = extra.get("variant", "AF-SGAE")
    tol = float(extra.get("zero_row_tol", 1e-12))
    report = optim.analyze(ckpt["params"], variant, bundle, zero_row_tol=tol)
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "sparsity_report.json",
        {
            "seed": ckpt["seed"],
            "variant": report.variant,
            "concepts": report.concepts,
            "gamma_histogram": report.gamma_histogram,
            "dominant_tally_pct": report.dominant_tally_pct,
            "beta_rank_curve": report.beta_rank_curve,
        },
    )
    lines = ["concept\tnode\tfoundation\tabs_projection"]
    for row in report.concepts:
        concept = row["concept"]
        foundation = row["dominant_foundation"]
        for node, s in zip(bundle.node_names, report.framing_strengths[concept]):
            lines.append(f"{concept}\t{node}\t{foundation}\t{s!r}")
    (out / "framing_strengths.tsv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_dynamics(args) -> int:
    ckpts = [_load_checkpoint(p) for p in args.checkpoints]
    for k, c in enumerate(ckpts):
        if c["embeddings"] is None or c["nodes"] is None:
            raise CliError(
                EXIT_FORMAT,
                "bad-checkpoint",
                f"checkpoint {args.checkpoints[k]} lacks embeddings or node names",
            )
    periods = args.periods or [str(k) for k in range(len(ckpts))]
    if len(periods) != len(ckpts):
        raise CliError(
            EXIT_USAGE, "bad-periods", "one period label per checkpoint required"
        )
    series = dyn.EmbeddingSeries(
        periods=tuple(periods),
        embeddings=tuple(
            {name: c["embeddings"][i] for i, name in enumerate(c["nodes"])}
            for c in ckpts
        ),
    )
    ranking = dyn.drift_ranking(series)
    out = _resolve(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["node\tperiod\tcosine"]
    for r in ranking:
        for period, cos in zip(r.periods, r.cosines):
            lines.append(f"{r.node}\t{period}\t{cos!r}")
    (out / "drift.tsv").write_text("\n".join(lines) + "\n")
    _write_json(
        out / "drift_ranking.json",
        {
            "periods": list(periods),
            "ranking": [
                {
                    "node": r.node,
                    "pearson_r": r.pearson_r,
                    "cosines": r.cosines,
                    "skipped": r.skipped,
                    "notice": r.notice,
                }
                for r in ranking
            ],
        },
    )
    return EXIT_OK


def cmd_plot_data(args) -> int:
    p = _require_file(args.input)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_FORMAT, "bad-input", f"{p}: {exc}") from exc
    out = _resolve(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "theta-curve":
        lines = _theta_curve_tsv(doc)
    elif args.kind == "beta-rank":
        curve = doc.get("beta_rank_curve")
        if curve is None:
            raise CliError(EXIT_FORMAT, "bad-input", f"{p}: no beta_rank_curve key")
        lines = ["rank\tmean_beta"] + [
            f"{rank}\t{value!r}" for rank, value in enumerate(curve, start=1)
        ]
    else:  # drift
        if "ranking" not in doc:
            raise CliError(EXIT_FORMAT, "bad-input", f"{p}: no ranking key")
        lines = ["node\tpearson_r"]
        for row in doc["ranking"]:
            r = row["pearson_r"]
            lines.append(f"{row['node']}\t{'' if r is None else repr(r)}")
    out.write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _theta_curve_tsv(doc) -> list:
    if "cells" not in doc or "histories" not in doc:
        raise CliError(
            EXIT_FORMAT, "bad-input", "theta-curve needs a sweep history document"
        )
    records = []
    for cell in doc["histories"]:
        for h in cell["history"]:
            records.append((h["n_active"], h["dev_auc"]))
    if not records:
        raise CliError(EXIT_FORMAT, "bad-input", "sweep history is empty")
    max_active = max(r[0] for r in records)
    lines = ["theta\tdev_auc"]
    for theta in range(max_active + 1):
        admissible = [auc for n, auc in records if n <= theta]
        if admissible:
            lines.append(f"{theta}\t{max(admissible)!r}")
    return lines


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsegae",
        description="Sparse graph auto-encoder pipeline for polarized-concept discovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("backbone", help="weighted TSV -> backboned graph + report")
    p.add_argument("--weights", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_backbone)

    p = sub.add_parser("split", help="partition graph edges into train/dev/test")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", type=float, nargs=3, default=[0.6, 0.2, 0.2])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a planted benchmark dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nodes", type=int, default=60)
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=float, default=0.5)
    p.add_argument("--p-out", type=float, default=0.05)
    p.add_argument("--concepts", type=int, default=50)
    p.add_argument("--informative", type=int, default=10)
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    def add_train_args(p):
        p.add_argument("--graph", required=True)
        p.add_argument("--features", required=True)
        p.add_argument("--split", required=True)
        p.add_argument("--out-dir", required=True)
        p.add_argument("--config")
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--theta", type=int)
        p.add_argument("--variant", choices=optim.VARIANTS)
        p.add_argument("--seed", type=int)
        p.add_argument(
            "--standardize", action="store_const", const=True, default=None
        )
        p.add_argument(
            "--exclude-eval-negatives",
            dest="exclude_eval_negatives",
            action="store_const",
            const=True,
            default=None,
        )

    p = sub.add_parser("train", help="train one model configuration")
    add_train_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="grid search under the sparsity cap")
    add_train_args(p)
    p.add_argument("--learning-rates", type=float, nargs="+")
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a checkpoint on dev or test pairs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--part", choices=["dev", "test"], default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="sparsity report for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dynamics", help="temporal drift from period checkpoints")
    p.add_argument("--checkpoints", nargs="+", required=True)
    p.add_argument("--periods", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("plot-data", help="emit ready-to-plot TSV series")
    p.add_argument("--kind", choices=["theta-curve", "beta-rank", "drift"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)

    return parser


def _emit_error(code: int, kind: str, message: str) -> None:
    line = json.dumps(
        {"error": {"code": code, "kind": kind, "message": message}}, sort_keys=True
    )
    print(line, file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _emit_error(exc.code, exc.kind, str(exc))
        return exc.code
    except optim.InfeasibleSparsityError as exc:
        _emit_error(EXIT_INFEASIBLE, "infeasible-theta", str(exc))
        return EXIT_INFEASIBLE
    except optim.TrainingDivergedError as exc:
        _emit_error(EXIT_DIVERGED, "diverged", str(exc))
        return EXIT_DIVERGED
    except (gc.GraphError, FeatureError, bb.BackboneError, ModelError,
            MetricError, SynthError, optim.OptimError, dyn.DynamicsError) as exc:
        _emit_error(EXIT_FORMAT, type(exc).__name__, str(exc))
        return EXIT_FORMAT
    except OSError as exc:
        _emit_error(EXIT_OTHER, "io-error", str(exc))
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
