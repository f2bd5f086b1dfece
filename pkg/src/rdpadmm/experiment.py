"""Cross-validated privacy/utility sweeps.

A :class:`SweepPlan` spans cells ``algo x lambda x (sigma or target
epsilon)``; each cell runs ``folds x reps`` trainings with disjoint noise
streams.  Results go to ``runs.jsonl`` (one record per run) and
``summary.csv`` (mean and standard deviation per cell).
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dpsgd, mpadmm, ssadmm
from .accounting import DEFAULT_ALPHAS, DpBudget
from .admm import INVERSE_EPOCH
from .data import Dataset, default_batch_size, kfold_indices
from .losses import LossModel, objective
from .mechanisms import NoiseSource
from .metrics import XI_KS, accuracy, xi_profile
from .report import RunReport

log = logging.getLogger(__name__)

ALGOS = ("ssadmm", "mpadmm", "dpsgd")
OUTPUT_ENV = "RDPADMM_OUTPUT_DIR"

RECORD_FIELDS = (
    "algo", "loss", "lambda", "rho", "eta0", "sigma", "T", "m", "n", "clip", "seed",
    "fold", "rep", "epsilon", "delta", "alpha_star", "accuracy", "objective",
    "xi_20", "xi_25", "xi_30", "xi_40", "wall_ms",
)
SUMMARY_METRICS = ("accuracy", "objective", "epsilon", "xi_20", "xi_25", "xi_30", "xi_40")


@dataclass(frozen=True)
class TrainSettings:
    """Hyperparameters shared by every cell of a sweep.

    ``rho``/``eta0``/``schedule`` of ``None`` take each algorithm's default
    (0.25, 1.0, inverse-epoch for ssADMM and DP-SGD; 0.5, 1.0, constant for
    mpADMM).  ``epochs`` counts expected epochs for the stochastic methods
    and full passes for mpADMM; ``iterations`` overrides it.
    """

    loss: str = "logistic"
    rho: float | None = None
    eta0: float | None = None
    schedule: str | None = None
    batch_size: int | None = None
    epochs: float = 10.0
    iterations: int | None = None
    clip: float = 1.0
    delta: float = 1e-8
    alphas: tuple[float, ...] = DEFAULT_ALPHAS


def build_config(algo: str, n: int, lam: float, sigma: float, s: TrainSettings):
    """Algorithm config for one run.  ``sigma`` may be 0 (non-private)."""
    if algo == "mpadmm":
        epochs = s.iterations if s.iterations is not None else int(round(s.epochs))
        return mpadmm.MpAdmmConfig.default(
            lam, sigma, epochs=epochs,
            rho=s.rho if s.rho is not None else 0.5,
            eta=s.eta0 if s.eta0 is not None else 1.0,
            clip=s.clip, alphas=s.alphas, delta=s.delta,
        )
    m = s.batch_size or default_batch_size(n)
    common = dict(
        batch_size=m, eta0=s.eta0 if s.eta0 is not None else 1.0,
        schedule=s.schedule or INVERSE_EPOCH, clip=s.clip, alphas=s.alphas, delta=s.delta,
    )
    if s.iterations is not None:
        common["iterations"] = s.iterations
    if algo == "ssadmm":
        return ssadmm.SsAdmmConfig.default(n, lam, sigma, epochs=s.epochs,
                                           rho=s.rho if s.rho is not None else 0.25, **common)
    if algo == "dpsgd":
        return dpsgd.DpSgdConfig.default(n, lam, sigma, epochs=s.epochs, **common)
    raise ValueError(f"unknown algorithm {algo!r}")


def calibrate_config(algo: str, n: int, cfg, target: DpBudget):
    module = {"ssadmm": ssadmm, "mpadmm": mpadmm, "dpsgd": dpsgd}[algo]
    return replace(cfg, sigma=module.calibrate(n, cfg, target))


def train(algo: str, data: Dataset, model: LossModel, cfg, noise: NoiseSource) -> RunReport:
    if algo == "ssadmm":
        return ssadmm.train_ssadmm(data, model, cfg, noise)
    if algo == "mpadmm":
        return mpadmm.train_mpadmm(data, model, cfg, noise)
    if algo == "dpsgd":
        return dpsgd.train_dpsgd(data, model, cfg, noise)
    raise ValueError(f"unknown algorithm {algo!r}")


def config_fields(algo: str, cfg) -> dict:
    if algo == "mpadmm":
        return {"rho": cfg.admm.rho, "eta0": cfg.eta, "T": cfg.epochs, "m": None}
    if algo == "ssadmm":
        return {"rho": cfg.admm.rho, "eta0": cfg.admm.eta0, "T": cfg.iterations, "m": cfg.batch_size}
    return {"rho": None, "eta0": cfg.eta0, "T": cfg.iterations, "m": cfg.batch_size}


@dataclass(frozen=True)
class SweepPlan:
    algos: tuple[str, ...] = ("ssadmm",)
    lambdas: tuple[float, ...] = (1e-4,)
    sigmas: tuple[float, ...] = ()
    epsilons: tuple[float, ...] = ()
    folds: int = 10
    reps: int = 10
    seed: int = 0
    settings: TrainSettings = field(default_factory=TrainSettings)

    def __post_init__(self):
        if bool(self.sigmas) == bool(self.epsilons):
            raise ValueError("give exactly one of a sigma grid or an epsilon grid")
        for a in self.algos:
            if a not in ALGOS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.folds < 1 or self.reps < 1:
            raise ValueError("folds and reps must be >= 1")

    def cells(self) -> list[tuple[str, float, str, float]]:
        """``(algo, lambda, 'sigma' | 'epsilon', value)`` in a fixed order."""
        kind, grid = ("sigma", self.sigmas) if self.sigmas else ("epsilon", self.epsilons)
        return [(a, lam, kind, v) for a in self.algos for lam in self.lambdas for v in grid]


def _splits(n: int, folds: int, seed: int):
    if folds == 1:
        # a single fold trains and tests on everything
        idx = np.arange(n)
        return [(idx, idx)]
    return kfold_indices(n, folds, seed)


def _run_one(job) -> dict:
    (cell_id, algo, lam, kind, value, fold, rep, train_idx, test_idx, data, plan, timing) = job
    s = plan.settings
    model = LossModel(s.loss)
    base = {"algo": algo, "loss": model.kind, "lambda": lam, "seed": plan.seed,
            "fold": fold, "rep": rep, "cell": cell_id, "delta": s.delta, "clip": s.clip}
    try:
        tr, te = data.subset(train_idx), data.subset(test_idx)
        if kind == "sigma":
            cfg = build_config(algo, tr.n, lam, value, s)
        else:
            cfg = build_config(algo, tr.n, lam, 1.0, s)
            cfg = calibrate_config(algo, tr.n, cfg, DpBudget(value, s.delta))
        noise = NoiseSource(plan.seed).spawn(cell_id, fold, rep)
        start = time.perf_counter()
        report = train(algo, tr, model, cfg, noise)
        elapsed = time.perf_counter() - start
        rec = dict(base, **config_fields(algo, cfg))
        xi = xi_profile(report.model, data.relevant) if data.relevant else {}
        rec.update(
            sigma=cfg.sigma, n=tr.n,
            epsilon=report.budget.epsilon if math.isfinite(report.budget.epsilon) else None,
            alpha_star=report.budget.alpha,
            accuracy=accuracy(report.model, te),
            objective=objective(model, report.model, te, lam),
            wall_ms=round(1000 * elapsed, 3) if timing else None,
            status="ok",
        )
        for k in XI_KS:
            rec[f"xi_{k}"] = xi.get(k)
        return rec
    except Exception as exc:  # recorded per run; the sweep continues
        return dict(base, status="error", error=f"{type(exc).__name__}: {exc}")


def run_experiment(
    plan: SweepPlan,
    data: Dataset,
    out_dir: str | os.PathLike | None = None,
    jobs: int = 1,
    emit_plot_data: bool = False,
    record_timing: bool = False,
) -> list[dict]:
    """Run the sweep on preprocessed ``data`` and return the run records.

    With ``out_dir`` the records, the per-cell summary and (optionally) the
    plot table are written there.  Output depends only on the plan, the data
    and the seed unless ``record_timing`` is set.
    """
    splits = _splits(data.n, plan.folds, plan.seed)
    work = []
    for cell_id, (algo, lam, kind, value) in enumerate(plan.cells()):
        for fold, (tr, te) in enumerate(splits):
            for rep in range(plan.reps):
                work.append((cell_id, algo, lam, kind, value, fold, rep, tr, te, data, plan, record_timing))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        records = [_run_one(w) for w in work]
    for rec, (cell_id, algo, lam, kind, value, *_rest) in zip(records, work):
        rec["grid"] = kind
        rec["grid_value"] = value
    failed = [r for r in records if r["status"] != "ok"]
    if failed:
        log.warning("%d of %d runs failed; first error: %s", len(failed), len(records), failed[0]["error"])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_records(records, out / "runs.jsonl")
        write_summary(summarize(records), out / "summary.csv")
        if emit_plot_data:
            write_plot_data(records, out / "plot_data.csv")
    return records


def write_records(records: Sequence[dict], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_records(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def summarize(records: Sequence[dict]) -> list[dict]:
    """Mean and (population) standard deviation of each metric per cell."""
    by_cell: dict[int, list[dict]] = {}
    for rec in records:
        by_cell.setdefault(rec["cell"], []).append(rec)
    rows = []
    for cell_id in sorted(by_cell):
        group = by_cell[cell_id]
        ok = [r for r in group if r["status"] == "ok"]
        first = group[0]
        row = {"cell": cell_id, "algo": first["algo"], "lambda": first["lambda"],
               "grid": first.get("grid"), "grid_value": first.get("grid_value"),
               "runs": len(group), "failed": len(group) - len(ok)}
        for metric in SUMMARY_METRICS:
            vals = [r[metric] for r in ok if r.get(metric) is not None]
            row[f"{metric}_mean"] = float(np.mean(vals)) if vals else None
            row[f"{metric}_std"] = float(np.std(vals)) if vals else None
        rows.append(row)
    return rows


def write_summary(rows: Sequence[dict], path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})


def write_plot_data(records: Sequence[dict], path) -> None:
    """Tidy table: one row per (cell, metric) with x = mean epsilon."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_epsilon", "series", "lambda", "metric", "y"])
        for row in summarize(records):
            if row["epsilon_mean"] is None:
                continue
            for metric in ("accuracy", "objective", "xi_20", "xi_25", "xi_30", "xi_40"):
                y = row[f"{metric}_mean"]
                if y is not None:
                    w.writerow([row["epsilon_mean"], row["algo"], row["lambda"], metric, y])

