"""Logistic and huberized-hinge losses for linear classifiers.

All functions work on margins ``z = l * x^T s``.  The ``*_batch`` variants
take a feature matrix ``S`` (n x p) and labels ``l`` (n,) and are what the
training loops use; the single-example functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LOGISTIC = "logistic"
HUBER = "hsvm"
_ALIASES = {"logistic": LOGISTIC, "hsvm": HUBER, "huber": HUBER, "huberized-hinge": HUBER}


@dataclass(frozen=True)
class LossModel:
    kind: str = LOGISTIC
    huber_h: float = 0.5

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", _ALIASES[self.kind])
        except KeyError:
            raise ValueError(f"unknown loss {self.kind!r}") from None
        if not self.huber_h > 0:
            raise ValueError("huber_h must be positive")


@dataclass(frozen=True)
class Example:
    s: np.ndarray
    l: float


def _margins(x, S, l):
    x = np.asarray(x, dtype=float)
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: model has {x.shape[0]}, features {S.shape[1]}")
    return np.asarray(l, dtype=float) * (S @ x)


def margin_loss(model: LossModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if model.kind == LOGISTIC:
        # softplus(-z), stable for both signs
        return np.logaddexp(0.0, -z)
    h = model.huber_h
    return np.where(
        z > 1 + h, 0.0, np.where(np.abs(1 - z) <= h, (1 + h - z) ** 2 / (4 * h), 1 - z)
    )


def margin_slope(model: LossModel, z: np.ndarray) -> np.ndarray:
    """Derivative of the loss with respect to the margin."""
    z = np.asarray(z, dtype=float)
    if model.kind == LOGISTIC:
        return -expit(-z)
    h = model.huber_h
    # boundaries |1 - z| == h take the middle branch; values agree there
    return np.where(
        z > 1 + h, 0.0, np.where(np.abs(1 - z) <= h, -(1 + h - z) / (2 * h), -1.0)
    )


def losses_batch(model: LossModel, x, S, l) -> np.ndarray:
    return margin_loss(model, _margins(x, S, l))


def grads_batch(model: LossModel, x, S, l) -> np.ndarray:
    """Per-example gradients, one row per example."""
    l = np.asarray(l, dtype=float)
    slope = margin_slope(model, _margins(x, S, l))
    return (slope * l)[:, None] * np.atleast_2d(np.asarray(S, dtype=float))


def example_loss(model: LossModel, x, d: Example) -> float:
    return float(losses_batch(model, x, np.atleast_2d(d.s), [d.l])[0])


def example_grad(model: LossModel, x, d: Example) -> np.ndarray:
    return grads_batch(model, x, np.atleast_2d(d.s), [d.l])[0]


def objective(model: LossModel, x, data, lam: float) -> float:
    """Mean loss over ``data`` plus ``lam * ||x||_1``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if len(data.labels) == 0:
        raise ValueError("objective of an empty dataset")
    risk = losses_batch(model, x, data.features, data.labels).mean()
    return float(risk + lam * np.abs(np.asarray(x, dtype=float)).sum())
