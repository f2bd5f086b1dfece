"""Baseline: differentially private proximal SGD.

Same sampling, clipping, noise and accounting as ssADMM; the L1 term is
handled by a soft-thresholding step after each noisy gradient step.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .accounting import DEFAULT_ALPHAS, DpBudget, RenyiCurve
from .admm import INVERSE_EPOCH, SCHEDULES, AdmmParams, soft_threshold, step_size
from .data import Dataset, default_batch_size
from .losses import LossModel, objective
from .mechanisms import TAG_GRADIENT, NoiseSource, gaussian_vector
from .report import RunReport, budget_of, check_finite
from . import ssadmm


@dataclass(frozen=True)
class DpSgdConfig:
    batch_size: int
    iterations: int
    sigma: float
    lam: float
    eta0: float = 1.0
    schedule: str = INVERSE_EPOCH
    epoch_length: int = 1
    clip: float = 1.0
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    delta: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1 or self.iterations < 0 or self.sigma < 0 or self.lam < 0:
            raise ValueError("invalid DP-SGD configuration")
        if not self.clip > 0 or not self.eta0 > 0:
            raise ValueError("clip and eta0 must be positive")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")

    @classmethod
    def default(cls, n: int, lam: float, sigma: float, epochs: float = 10.0, **kw) -> "DpSgdConfig":
        m = kw.pop("batch_size", default_batch_size(n))
        epoch = math.ceil(n / m)
        iterations = kw.pop("iterations", int(round(epochs * epoch)))
        return cls(batch_size=m, iterations=iterations, sigma=sigma, lam=lam, epoch_length=epoch, **kw)

    def step(self, k: int) -> float:
        # the schedule logic lives with the ADMM parameters; rho is unused here
        params = AdmmParams(1.0, self.lam, self.eta0, self.schedule, self.epoch_length)
        return step_size(params, k)

    def accounting_view(self) -> ssadmm.SsAdmmConfig:
        """The equivalent ssADMM config for privacy purposes."""
        return ssadmm.SsAdmmConfig(
            batch_size=self.batch_size,
            iterations=self.iterations,
            sigma=self.sigma,
            admm=AdmmParams(1.0, self.lam, self.eta0, self.schedule, self.epoch_length),
            clip=self.clip,
            alphas=self.alphas,
            delta=self.delta,
        )

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("alphas")
        return d


def dpsgd_curve(n: int, cfg: DpSgdConfig) -> RenyiCurve | None:
    return ssadmm.ssadmm_curve(n, cfg.accounting_view())


def calibrate(n: int, cfg: DpSgdConfig, target: DpBudget) -> float:
    return ssadmm.calibrate(n, cfg.accounting_view(), target)


def train_dpsgd(data: Dataset, model: LossModel, cfg: DpSgdConfig, noise: NoiseSource) -> RunReport:
    start = time.perf_counter()
    n, p = data.n, data.p
    curve = dpsgd_curve(n, cfg)

    x = np.zeros(p)
    x_sum = np.zeros(p)
    trace: list[tuple[float, float]] = []
    for k in range(cfg.iterations):
        idx = ssadmm.sample_batch(noise, k, n, cfg.batch_size)
        g = ssadmm.batch_gradient(model, x, data.features[idx], data.labels[idx], cfg.clip)
        g = g + gaussian_vector(noise, p, cfg.sigma, step=k, tag=TAG_GRADIENT)
        eta = cfg.step(k)
        x = soft_threshold(x - eta * g, cfg.lam * eta)
        check_finite(k, x)
        x_sum += x
        trace.append((objective(model, x, data, cfg.lam), 0.0))

    return RunReport(
        algo="dpsgd",
        model=x,
        rdp_curve=curve,
        budget=budget_of(curve, cfg.delta),
        trace=trace,
        config=cfg.echo(),
        seed=noise.seed,
        averaged_model=x_sum / cfg.iterations if cfg.iterations else x.copy(),
        wall_time=time.perf_counter() - start,
    )
