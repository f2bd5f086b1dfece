"""Linearized stochastic ADMM for ``f(x) + lambda * ||z||_1`` s.t. ``x = z``.

The x-subproblem replaces ``f`` by its (possibly noisy) gradient plus a
proximal term ``||x - x^k||^2 / (2 eta^k)`` and is solved in closed form;
the z-subproblem is soft-thresholding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

CONSTANT = "constant"
INVERSE_EPOCH = "inverse-epoch"
INVERSE_SQRT = "inverse-sqrt"
SCHEDULES = (CONSTANT, INVERSE_EPOCH, INVERSE_SQRT)


@dataclass(frozen=True)
class AdmmParams:
    rho: float
    lam: float
    eta0: float = 1.0
    schedule: str = CONSTANT
    epoch_length: int = 1

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.eta0 > 0:
            raise ValueError(f"eta0 must be positive, got {self.eta0}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.epoch_length < 1:
            raise ValueError("epoch_length must be >= 1")


@dataclass(frozen=True)
class AdmmState:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    k: int = 0

    @classmethod
    def zeros(cls, p: int) -> "AdmmState":
        return cls(np.zeros(p), np.zeros(p), np.zeros(p), 0)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.y))
        )


def step_size(params: AdmmParams, k: int) -> float:
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    if params.schedule == CONSTANT:
        return params.eta0
    if params.schedule == INVERSE_SQRT:
        return params.eta0 / math.sqrt(k + 1)
    # expected epoch counter h = 1, 2, ...
    return params.eta0 / math.ceil((k + 1) / params.epoch_length)


def x_update(state: AdmmState, grad: np.ndarray, params: AdmmParams, k: int | None = None) -> np.ndarray:
    eta = step_size(params, state.k if k is None else k)
    return (-grad - state.y + params.rho * state.z + state.x / eta) / (params.rho + 1.0 / eta)


def soft_threshold(w: np.ndarray, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("threshold must be >= 0")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def z_update(x_next: np.ndarray, y: np.ndarray, params: AdmmParams) -> np.ndarray:
    return soft_threshold(x_next + y / params.rho, params.lam / params.rho)


def y_update(state: AdmmState, x_next: np.ndarray, z_next: np.ndarray, params: AdmmParams) -> np.ndarray:
    return state.y + params.rho * (x_next - z_next)


def admm_step(state: AdmmState, grad: np.ndarray, params: AdmmParams) -> AdmmState:
    """One full (x, z, y) sweep using ``grad`` as the data gradient."""
    x = x_update(state, grad, params)
    z = z_update(x, state.y, params)
    y = y_update(state, x, z, params)
    return replace(state, x=x, z=z, y=y, k=state.k + 1)
