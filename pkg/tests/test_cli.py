import json

import numpy as np
import pytest

from latentctl.cli import build_parser, main
from latentctl.envs import load_triplets


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_control_task_source_exclusivity(tmp_path):
    base = ["control", "--ckpt", "x.pt", "--env", "planar",
            "--out", str(tmp_path / "o.csv")]
    with pytest.raises(SystemExit):
        main(base)
    with pytest.raises(SystemExit):
        main(base + ["--task-file", "a.csv", "--task-set", "nav"])


def test_theory_check_migap(tmp_path, capsys):
    out = tmp_path / "report.json"
    rc = main(["theory-check", "--suite", "migap", "--trials", "3",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["trials"] == 3
    assert report["min_margin"] >= -1e-9
    assert report["max_witness_error"] <= 1e-9
    printed = json.loads(capsys.readouterr().out)
    assert printed == report


def test_theory_check_counterexample_needs_steps(tmp_path):
    # 40 optimizer steps cannot push eta past 10, so the check reports
    # failure through the exit code
    out = tmp_path / "short.json"
    rc = main(["theory-check", "--suite", "counterexample", "--trials", "40",
               "--seed", "0", "--out", str(out)])
    assert rc == 1
    report = json.loads(out.read_text())
    assert report["passed"] is False
    assert report["cpc_only"]["eta"] <= 10.0


def test_gen_data_train_control_chain(tmp_path, capsys):
    data = tmp_path / "planar.bin"
    rc = main(["gen-data", "--env", "planar", "--n", "64", "--seed", "7",
               "--out", str(data)])
    assert rc == 0
    ds = load_triplets(data)
    assert ds.env == "planar" and len(ds) == 64

    ckpt = tmp_path / "model.pt"
    rc = main(["train", "--data", str(data), "--out", str(ckpt),
               "--epochs", "1", "--seed", "3", "--scale", "0.1",
               "--batch-size", "32"])
    assert rc == 0 and ckpt.exists()

    scores = tmp_path / "scores.csv"
    rc = main(["control", "--ckpt", str(ckpt), "--env", "planar",
               "--task-set", "nav", "--n-tasks", "1", "--out", str(scores)])
    assert rc == 0
    lines = scores.read_text().splitlines()
    assert lines[0] == "task,percent_in_goal,planned_cost,converged"
    assert len(lines) == 2
    pct = float(lines[1].split(",")[1])
    assert 0.0 <= pct <= 100.0

    out_dir = tmp_path / "map"
    rc = main(["export-map", "--ckpt", str(ckpt), "--env", "planar",
               "--out", str(out_dir)])
    assert rc == 0
    assert (out_dir / "latent_map.csv").exists()
    assert (out_dir / "latent_map.png").exists()
    table = np.loadtxt(out_dir / "latent_map.csv", delimiter=",", skiprows=1)
    assert table.shape == (1285, 4)  # s0,s1,z0,z1
    capsys.readouterr()


def test_env_mismatch_between_ckpt_and_flag(tmp_path):
    data = tmp_path / "planar.bin"
    main(["gen-data", "--env", "planar", "--n", "48", "--seed", "0",
          "--out", str(data)])
    ckpt = tmp_path / "m.pt"
    main(["train", "--data", str(data), "--out", str(ckpt),
          "--epochs", "0", "--scale", "0.1"])
    with pytest.raises(SystemExit):
        main(["control", "--ckpt", str(ckpt), "--env", "pendulum",
              "--task-set", "balance", "--n-tasks", "1",
              "--out", str(tmp_path / "o.csv")])


def test_grid_from_yaml(tmp_path, capsys):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(
        "env: planar\n"
        f"out_dir: {tmp_path / 'grid'}\n"
        "n_models: 1\n"
        "n_tasks: 1\n"
        "n_samples: 48\n"
        "epochs: 0\n"
        "scale: 0.1\n"
        "batch_size: 32\n")
    rc = main(["grid", "--config", str(cfg)])
    assert rc == 0
    out = tmp_path / "grid"
    assert (out / "manifest.json").exists()
    assert (out / "results.json").exists()
    assert (out / "cells" / "model_00.json").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["env"] == "planar"
    assert "config_sha256" in manifest and "versions" in manifest
    text = capsys.readouterr().out
    assert "nav_mean" in text
