"""Full-gradient ADMM with output perturbation after every epoch.

An epoch is one deterministic linearized ADMM step on the full (clipped)
gradient, after which x, z and y are each released with independent
Gaussian noise.  The next epoch starts from the released, noisy state, so
the sensitivity of one epoch only depends on the records through the
gradient mean.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .accounting import (
    DEFAULT_ALPHAS,
    DpBudget,
    GaussianMechanismSpec,
    RenyiCurve,
    calibrate_sigma,
    compose,
    gaussian_rdp,
)
from .admm import CONSTANT, AdmmParams, AdmmState, admm_step
from .data import Dataset
from .losses import LossModel, objective
from .mechanisms import TAG_X, TAG_Y, TAG_Z, NoiseSource, gaussian_vector
from .report import RunReport, budget_of, check_finite
from .ssadmm import batch_gradient


@dataclass(frozen=True)
class MpAdmmConfig:
    epochs: int
    sigma: float
    admm: AdmmParams
    clip: float = 1.0
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    delta: float = 1e-8

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.clip > 0:
            raise ValueError("clip bound must be positive")
        if self.admm.schedule != CONSTANT:
            raise ValueError("mpADMM uses a constant step size")

    @classmethod
    def default(cls, lam: float, sigma: float, epochs: int = 20, **kw) -> "MpAdmmConfig":
        admm = AdmmParams(rho=kw.pop("rho", 0.5), lam=lam, eta0=kw.pop("eta", 1.0), schedule=CONSTANT)
        return cls(epochs=epochs, sigma=sigma, admm=admm, **kw)

    @property
    def eta(self) -> float:
        return self.admm.eta0

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("alphas")
        return d


def epoch_sensitivities(C: float, n: int, eta: float, rho: float) -> tuple[float, float, float]:
    """L2 sensitivities of the x, z and y released after one epoch.

    Replacing one record moves the clipped gradient mean by at most 2C/n,
    and the x-update scales it by ``eta / (1 + eta * rho)``.  The z change
    is dominated elementwise by the x change (soft-thresholding never
    expands a difference nor flips its sign), and y moves by
    ``rho * (dx - dz)``, which is dominated by ``rho * dx``.
    """
    if min(C, n, eta, rho) <= 0:
        raise ValueError("C, n, eta and rho must all be positive")
    dx = 2.0 * C * eta / (n * (1.0 + eta * rho))
    return dx, dx, rho * dx


def epoch_curve(n: int, cfg: MpAdmmConfig) -> RenyiCurve:
    dx, dz, dy = epoch_sensitivities(cfg.clip, n, cfg.eta, cfg.admm.rho)
    return compose(
        [gaussian_rdp(GaussianMechanismSpec(d, cfg.sigma), cfg.alphas) for d in (dx, dz, dy)],
        cfg.alphas,
    )


def mpadmm_curve(n: int, cfg: MpAdmmConfig) -> RenyiCurve | None:
    if cfg.epochs == 0:
        return RenyiCurve.zero(cfg.alphas)
    if cfg.sigma == 0:
        return None
    return epoch_curve(n, cfg).scaled(cfg.epochs)


def calibrate(n: int, cfg: MpAdmmConfig, target: DpBudget) -> float:
    # three Gaussian releases with a shared sigma compose like one release
    # whose squared sensitivity is the sum of the three
    dx, dz, dy = epoch_sensitivities(cfg.clip, n, cfg.eta, cfg.admm.rho)
    return calibrate_sigma(target, cfg.epochs, 1.0, math.sqrt(dx * dx + dz * dz + dy * dy), cfg.alphas)


def train_mpadmm(
    data: Dataset,
    model: LossModel,
    cfg: MpAdmmConfig,
    noise: NoiseSource,
    callback: Callable[[AdmmState], None] | None = None,
) -> RunReport:
    start = time.perf_counter()
    n, p = data.n, data.p
    curve = mpadmm_curve(n, cfg)
    params = cfg.admm

    state = AdmmState.zeros(p)
    x_sum = np.zeros(p)
    trace: list[tuple[float, float]] = []
    for k in range(cfg.epochs):
        g = batch_gradient(model, state.x, data.features, data.labels, cfg.clip)
        state = admm_step(state, g, params)
        state = AdmmState(
            state.x + gaussian_vector(noise, p, cfg.sigma, step=k, tag=TAG_X),
            state.z + gaussian_vector(noise, p, cfg.sigma, step=k, tag=TAG_Z),
            state.y + gaussian_vector(noise, p, cfg.sigma, step=k, tag=TAG_Y),
            state.k,
        )
        check_finite(k, state.x, state.z, state.y)
        x_sum += state.x
        if callback is not None:
            callback(state)
        trace.append((objective(model, state.x, data, params.lam), float(np.linalg.norm(state.x - state.z))))

    return RunReport(
        algo="mpadmm",
        model=state.x,
        rdp_curve=curve,
        budget=budget_of(curve, cfg.delta),
        trace=trace,
        config=cfg.echo(),
        seed=noise.seed,
        averaged_model=x_sum / cfg.epochs if cfg.epochs else state.x.copy(),
        wall_time=time.perf_counter() - start,
    )
