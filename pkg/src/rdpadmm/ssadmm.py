"""Subsampled stochastic ADMM with Gaussian gradient perturbation.

Each iteration samples ``m`` of ``n`` records without replacement, averages
their clipped gradients, adds ``N(0, sigma^2 I)`` and takes one linearized
ADMM step with the noisy gradient.  Only the gradient release touches the
data, so the per-iteration privacy cost is the subsampled Gaussian curve
with sensitivity ``2C/m`` and the run composes ``T`` of them.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .accounting import DEFAULT_ALPHAS, DpBudget, RenyiCurve, calibrate_sigma, iterated_gaussian_curve
from .admm import INVERSE_EPOCH, AdmmParams, AdmmState, admm_step
from .data import Dataset, default_batch_size
from .losses import LossModel, grads_batch, objective
from .mechanisms import TAG_BATCH, TAG_GRADIENT, NoiseSource, clip_rows, gaussian_vector
from .report import RunReport, budget_of, check_finite


@dataclass(frozen=True)
class SsAdmmConfig:
    batch_size: int
    iterations: int
    sigma: float
    admm: AdmmParams
    clip: float = 1.0
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    delta: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.clip > 0:
            raise ValueError("clip bound must be positive")

    @classmethod
    def default(cls, n: int, lam: float, sigma: float, epochs: float = 10.0, **kw) -> "SsAdmmConfig":
        """Batch ``ceil(sqrt(n))``, rho 0.25, step ``eta0 / expected_epoch``."""
        m = kw.pop("batch_size", default_batch_size(n))
        epoch = math.ceil(n / m)
        admm = AdmmParams(
            rho=kw.pop("rho", 0.25),
            lam=lam,
            eta0=kw.pop("eta0", 1.0),
            schedule=kw.pop("schedule", INVERSE_EPOCH),
            epoch_length=epoch,
        )
        iterations = kw.pop("iterations", int(round(epochs * epoch)))
        return cls(batch_size=m, iterations=iterations, sigma=sigma, admm=admm, **kw)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("alphas")
        return d


def batch_gradient(model: LossModel, x: np.ndarray, S: np.ndarray, l: np.ndarray, C: float) -> np.ndarray:
    """Mean of per-example gradients, each clipped to norm ``C`` first."""
    if len(l) == 0:
        raise ValueError("empty batch")
    return clip_rows(grads_batch(model, x, S, l), C).mean(axis=0)


def gradient_sensitivity(C: float, m: int) -> float:
    """L2 sensitivity of a mean of ``m`` gradients clipped at ``C``."""
    return 2.0 * C / m


def ssadmm_curve(n: int, cfg: SsAdmmConfig) -> RenyiCurve | None:
    """Privacy curve of a run on ``n`` records; depends only on the config."""
    if cfg.batch_size > n:
        raise ValueError(f"batch size {cfg.batch_size} exceeds dataset size {n}")
    if cfg.iterations == 0:
        return RenyiCurve.zero(cfg.alphas)
    if cfg.sigma == 0:
        return None
    return iterated_gaussian_curve(
        cfg.sigma,
        gradient_sensitivity(cfg.clip, cfg.batch_size),
        cfg.iterations,
        q=cfg.batch_size / n,
        alpha_grid=cfg.alphas,
    )


def calibrate(n: int, cfg: SsAdmmConfig, target: DpBudget) -> float:
    return calibrate_sigma(
        target,
        cfg.iterations,
        cfg.batch_size / n,
        gradient_sensitivity(cfg.clip, cfg.batch_size),
        cfg.alphas,
    )


def sample_batch(noise: NoiseSource, k: int, n: int, m: int) -> np.ndarray:
    return noise.generator(k, TAG_BATCH).choice(n, size=m, replace=False)


def train_ssadmm(
    data: Dataset,
    model: LossModel,
    cfg: SsAdmmConfig,
    noise: NoiseSource,
    record_noise: bool = False,
    callback: Callable[[AdmmState], None] | None = None,
) -> RunReport:
    """Run ``cfg.iterations`` noisy ADMM steps from ``x = z = y = 0``.

    ``record_noise`` keeps every gradient noise draw in the report;
    ``callback`` sees the state after each step.
    """
    start = time.perf_counter()
    n, p = data.n, data.p
    curve = ssadmm_curve(n, cfg)
    S, l = data.features, data.labels
    params = cfg.admm

    state = AdmmState.zeros(p)
    x_sum = np.zeros(p)
    trace: list[tuple[float, float]] = []
    log: list[np.ndarray] | None = [] if record_noise else None
    for k in range(cfg.iterations):
        idx = sample_batch(noise, k, n, cfg.batch_size)
        g = batch_gradient(model, state.x, S[idx], l[idx], cfg.clip)
        gamma = gaussian_vector(noise, p, cfg.sigma, step=k, tag=TAG_GRADIENT)
        if log is not None:
            log.append(gamma)
        state = admm_step(state, g + gamma, params)
        check_finite(k, state.x, state.z, state.y)
        x_sum += state.x
        if callback is not None:
            callback(state)
        trace.append((objective(model, state.x, data, params.lam), float(np.linalg.norm(state.x - state.z))))

    return RunReport(
        algo="ssadmm",
        model=state.x,
        rdp_curve=curve,
        budget=budget_of(curve, cfg.delta),
        trace=trace,
        config=cfg.echo(),
        seed=noise.seed,
        averaged_model=x_sum / cfg.iterations if cfg.iterations else state.x.copy(),
        wall_time=time.perf_counter() - start,
        noise_log=log,
    )

