import json
import subprocess
import sys

import pytest

from rdpadmm.cli import main
from rdpadmm.experiment import OUTPUT_ENV


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["generate-data", "--n", "200", "--p", "25", "--seed", "2", "--out", str(path)]) == 0
    return path


def _data_args(path):
    return ["--data", str(path), "--has-header", "--label-col", "label"]


def test_account_prints_budget_and_curve(tmp_path, capsys):
    curve = tmp_path / "c.csv"
    assert main(["account", "--n", "3600", "--sigma", "1.0", "--iters", "100", "--curve-out", str(curve)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["delta"] == 1e-8 and out["epsilon"] > 0
    lines = curve.read_text().splitlines()
    assert lines[0] == "alpha,epsilon" and len(lines) == 64


def test_calibrate_meets_target(capsys):
    assert main(["calibrate", "--n", "3600", "--iters", "100", "--target-eps", "1.0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert 0.99 < out["epsilon"] <= 1.0


def test_infeasible_calibration_exits_nonzero(capsys):
    assert main(["calibrate", "--n", "100", "--iters", "5000", "--target-eps", "0.1"]) != 0
    assert "error" in capsys.readouterr().err


def test_train_then_evaluate(dataset, tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["train", *_data_args(dataset), "--sigma", "0.5", "--loss", "hsvm", "--out", str(report)]) == 0
    rec = json.loads(report.read_text())
    assert rec["loss"] == "hsvm" and rec["wall_ms"] is None and len(rec["model"]) == 26
    assert main(["evaluate", *_data_args(dataset), "--report", str(report)]) == 0
    scores = json.loads(capsys.readouterr().out)
    assert 0 <= scores["accuracy"] <= 1 and "xi_20" in scores


def test_config_file_with_flag_override(dataset, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nsigma = 2.0\niters = 7\nalgo = dpsgd\n")
    out = tmp_path / "r.json"
    assert main(["train", "--config", str(cfg), *_data_args(dataset), "--iters", "3", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())
    assert rec["algo"] == "dpsgd"
    assert rec["config"]["sigma"] == 2.0
    assert rec["config"]["iterations"] == 3


def test_sweep_uses_env_output_dir(dataset, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "envout"))
    rc = main(["sweep", *_data_args(dataset), "--sigmas", "1", "--folds", "2", "--reps", "2", "--epochs", "1"])
    assert rc == 0
    assert len((tmp_path / "envout" / "runs.jsonl").read_text().splitlines()) == 4


def test_sweep_exit_code_reflects_failures(dataset, tmp_path):
    rc = main(["sweep", *_data_args(dataset), "--epsilons", "0.001", "--folds", "2", "--reps", "1",
               "--epochs", "50", "--out-dir", str(tmp_path / "o")])
    assert rc == 1


def test_module_entry_point_is_byte_deterministic(dataset, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        cmd = [sys.executable, "-m", "rdpadmm", "train", *_data_args(dataset), "--sigma", "1", "--seed", "4",
               "--iters", "20", "--out", str(out)]
        subprocess.run(cmd, check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
