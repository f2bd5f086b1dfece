import csv

import numpy as np
import pytest

from rdpadmm.data import SyntheticSpec, generate_synthetic, preprocess
from rdpadmm.experiment import (
    RECORD_FIELDS,
    SweepPlan,
    TrainSettings,
    read_records,
    run_experiment,
)


@pytest.fixture(scope="module")
def data():
    return preprocess(generate_synthetic(SyntheticSpec(n=300, p=25, seed=5)))


FAST = TrainSettings(epochs=2)


def test_single_cell_single_run(data, tmp_path):
    plan = SweepPlan(sigmas=(1.0,), folds=1, reps=1, settings=FAST)
    recs = run_experiment(plan, data, tmp_path)
    assert len(recs) == 1
    rec = recs[0]
    assert rec["status"] == "ok"
    assert set(RECORD_FIELDS) <= set(rec)
    assert rec["wall_ms"] is None
    assert rec["m"] == 18 and rec["n"] == 300
    assert read_records(tmp_path / "runs.jsonl") == recs


def test_full_grid_counts_and_summary(data, tmp_path):
    plan = SweepPlan(algos=("ssadmm", "dpsgd"), lambdas=(1e-4, 1e-3), sigmas=(2.0,), folds=10, reps=10, settings=FAST)
    recs = run_experiment(plan, data, tmp_path, emit_plot_data=True)
    assert len(recs) == 4 * 100
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    for row in rows:
        mine = [r["accuracy"] for r in recs if r["cell"] == int(row["cell"])]
        assert float(row["accuracy_mean"]) == pytest.approx(np.mean(mine))
        assert float(row["accuracy_std"]) == pytest.approx(np.std(mine))
        assert row["runs"] == "100"
    assert (tmp_path / "plot_data.csv").read_text().startswith("x_epsilon,series")


def test_runs_use_distinct_noise(data):
    plan = SweepPlan(sigmas=(1.0,), folds=1, reps=3, settings=FAST)
    recs = run_experiment(plan, data)
    assert len({r["objective"] for r in recs}) == 3


def test_output_is_reproducible_and_parallel_safe(data, tmp_path):
    plan = SweepPlan(algos=("ssadmm", "mpadmm"), sigmas=(0.5,), folds=3, reps=2, settings=FAST)
    run_experiment(plan, data, tmp_path / "a")
    run_experiment(plan, data, tmp_path / "b", jobs=2)
    for name in ("runs.jsonl", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_epsilon_grid_calibrates(data):
    plan = SweepPlan(epsilons=(3.0,), folds=2, reps=1, settings=TrainSettings(epochs=1))
    recs = run_experiment(plan, data)
    assert all(r["status"] == "ok" and r["epsilon"] <= 3.0 for r in recs)
    assert all(r["epsilon"] > 2.9 for r in recs)


def test_failures_are_recorded_not_raised(data):
    plan = SweepPlan(epsilons=(1e-3,), folds=2, reps=1, settings=TrainSettings(epochs=50))
    recs = run_experiment(plan, data)
    assert all(r["status"] == "error" and "InfeasibleBudget" in r["error"] for r in recs)


def test_plan_validation():
    with pytest.raises(ValueError):
        SweepPlan(sigmas=(1.0,), epsilons=(1.0,))
    with pytest.raises(ValueError):
        SweepPlan()
    with pytest.raises(ValueError):
        SweepPlan(algos=("sgd",), sigmas=(1.0,))
