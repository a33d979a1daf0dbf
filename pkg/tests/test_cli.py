"""End-to-end CLI behavior: exit codes, file formats, pipeline wiring."""

import json

import numpy as np
import pytest

from sparsegae import backbone as bb
from sparsegae import cli


def run(argv):
    return cli.main(argv)


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "data"
    code = run(
        [
            "synth", "--out-dir", str(out), "--nodes", "24", "--concepts", "8",
            "--informative", "2", "--p-in", "0.8", "--p-out", "0.05", "--seed", "7",
        ]
    )
    assert code == 0
    split = tmp_path / "split.json"
    assert run(["split", "--graph", str(out / "graph.json"), "--out", str(split), "--seed", "7"]) == 0
    return out, split


def test_synth_writes_graph_features_truth(synth_dir):
    out, _ = synth_dir
    assert (out / "graph.json").is_file()
    assert (out / "features" / "manifest.json").is_file()
    truth = json.loads((out / "truth.json").read_text())
    assert len(truth["informative"]) == 2
    assert len(truth["blocks"]) == 24


def test_missing_input_exit_code(tmp_path, capsys):
    code = run(["split", "--graph", str(tmp_path / "nope.json"), "--out", str(tmp_path / "s.json")])
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"]["code"] == 3
    assert err["error"]["kind"] == "missing-file"


def test_malformed_graph_exit_code(tmp_path, capsys):
    bad = tmp_path / "graph.json"
    bad.write_text("{not json")
    code = run(["split", "--graph", str(bad), "--out", str(tmp_path / "s.json")])
    assert code == 4


def test_train_eval_analyze_pipeline(synth_dir, tmp_path):
    data, split = synth_dir
    run_dir = tmp_path / "run"
    code = run(
        [
            "train",
            "--graph", str(data / "graph.json"),
            "--features", str(data / "features"),
            "--split", str(split),
            "--out-dir", str(run_dir),
            "--epochs", "10", "--learning-rate", "0.01",
            "--lambda", "0.001", "--seed", "7",
        ]
    )
    assert code == 0
    history = json.loads((run_dir / "history.json").read_text())
    assert len(history["history"]) == 10
    assert (run_dir / "checkpoint" / "manifest.json").is_file()

    out = tmp_path / "eval.json"
    code = run(
        [
            "eval",
            "--checkpoint", str(run_dir / "checkpoint"),
            "--graph", str(data / "graph.json"),
            "--features", str(data / "features"),
            "--split", str(split),
            "--part", "dev",
            "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert 0.0 <= doc["auc"] <= 1.0
    # The checkpoint holds the best dev epoch, so the reported dev AUC must
    # equal the best value seen during training.
    assert doc["auc"] == max(h["dev_auc"] for h in history["history"])

    analysis = tmp_path / "analysis"
    code = run(
        [
            "analyze",
            "--checkpoint", str(run_dir / "checkpoint"),
            "--features", str(data / "features"),
            "--out-dir", str(analysis),
        ]
    )
    assert code == 0
    report = json.loads((analysis / "sparsity_report.json").read_text())
    assert report["variant"] == "AF-SGAE"
    assert (analysis / "framing_strengths.tsv").read_text().startswith("concept\tnode")


def test_config_file_and_flag_precedence(synth_dir, tmp_path):
    data, split = synth_dir
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"epochs": 4, "learning_rate": 0.02, "seed": 1}))
    run_dir = tmp_path / "run"
    code = run(
        [
            "train",
            "--graph", str(data / "graph.json"),
            "--features", str(data / "features"),
            "--split", str(split),
            "--out-dir", str(run_dir),
            "--config", str(config),
            "--epochs", "6",
        ]
    )
    assert code == 0
    doc = json.loads((run_dir / "history.json").read_text())
    assert doc["config"]["epochs"] == 6  # flag beats config file
    assert doc["config"]["learning_rate"] == 0.02
    assert doc["config"]["seed"] == 1

    config.write_text(json.dumps({"unknown_key": 1}))
    assert run(
        [
            "train",
            "--graph", str(data / "graph.json"),
            "--features", str(data / "features"),
            "--split", str(split),
            "--out-dir", str(tmp_path / "run2"),
            "--config", str(config),
        ]
    ) == 4


def test_sweep_infeasible_exit_code(synth_dir, tmp_path, capsys):
    data, split = synth_dir
    code = run(
        [
            "sweep",
            "--graph", str(data / "graph.json"),
            "--features", str(data / "features"),
            "--split", str(split),
            "--out-dir", str(tmp_path / "sweep"),
            "--theta", "0",
            "--learning-rates", "0.01",
            "--lambdas", "0.0",
            "--epochs", "3",
        ]
    )
    assert code == 5
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"]["kind"] == "infeasible-theta"


def test_backbone_command(tmp_path):
    rng = np.random.default_rng(0)
    n = 10
    names = tuple(f"s{i}" for i in range(n))
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w[i, j] = w[j, i] = 80.0 if (i % 2) == (j % 2) else 1.0
    bb.save_weighted_tsv(bb.WeightedNetwork(names, w), tmp_path / "w.tsv")
    out = tmp_path / "bb"
    assert run(["backbone", "--weights", str(tmp_path / "w.tsv"), "--out-dir", str(out)]) == 0
    report = json.loads((out / "backbone_report.json").read_text())
    assert "delta_used" in report and "modularity_q" in report
    assert (out / "graph.json").is_file()


def test_dynamics_and_plot_data(synth_dir, tmp_path):
    data, split = synth_dir
    ckpts = []
    for seed in (1, 2, 3):
        run_dir = tmp_path / f"run{seed}"
        assert run(
            [
                "train",
                "--graph", str(data / "graph.json"),
                "--features", str(data / "features"),
                "--split", str(split),
                "--out-dir", str(run_dir),
                "--epochs", "5", "--learning-rate", "0.01",
                "--lambda", "0.001", "--seed", str(seed),
            ]
        ) == 0
        ckpts.append(str(run_dir / "checkpoint"))
    out = tmp_path / "dyn"
    assert run(
        ["dynamics", "--checkpoints", *ckpts, "--periods", "t0", "t1", "t2",
         "--out-dir", str(out)]
    ) == 0
    ranking = json.loads((out / "drift_ranking.json").read_text())
    assert ranking["periods"] == ["t0", "t1", "t2"]
    assert len(ranking["ranking"]) == 24
    assert run(
        ["plot-data", "--kind", "drift",
         "--input", str(out / "drift_ranking.json"),
         "--out", str(tmp_path / "drift.tsv")]
    ) == 0
    assert (tmp_path / "drift.tsv").read_text().startswith("node\tpearson_r")
