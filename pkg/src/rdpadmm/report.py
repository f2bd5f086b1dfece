"""Run reports shared by all trainers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .accounting import DpBudget, RenyiCurve, to_approx_dp


class NonFiniteIterateError(FloatingPointError):
    """Training produced a NaN or infinite iterate."""


@dataclass
class RunReport:
    """Outcome of one private training run.

    ``trace`` holds ``(objective, ||x - z||_2)`` per iteration, measured on
    the training data.  It is a non-private diagnostic and is not covered
    by the reported budget.
    """

    algo: str
    model: np.ndarray
    rdp_curve: RenyiCurve | None
    budget: DpBudget
    trace: list[tuple[float, float]]
    config: dict
    seed: int
    averaged_model: np.ndarray | None = None
    wall_time: float | None = None
    noise_log: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def epsilon(self) -> float:
        return self.budget.epsilon

    def to_record(self, include_trace: bool = True, include_timing: bool = False) -> dict:
        """JSON-ready record.  Wall time is left out (``None``) unless
        ``include_timing`` is set, so identical runs give identical records."""
        rec = {
            "algo": self.algo,
            "seed": self.seed,
            "config": self.config,
            "epsilon": _num(self.budget.epsilon),
            "delta": self.budget.delta,
            "alpha_star": self.budget.alpha,
            "rdp_curve": None if self.rdp_curve is None else [list(r) for r in self.rdp_curve.to_rows()],
            "model": [float(v) for v in self.model],
            "wall_ms": None if self.wall_time is None or not include_timing else round(1000 * self.wall_time, 3),
        }
        if include_trace:
            rec["trace"] = [[float(o), float(r)] for o, r in self.trace]
        return rec

    def to_json(self, include_trace: bool = True, include_timing: bool = False) -> str:
        return json.dumps(self.to_record(include_trace, include_timing), sort_keys=True, allow_nan=False)


def _num(v: float):
    return v if math.isfinite(v) else None


def budget_of(curve: RenyiCurve | None, delta: float) -> DpBudget:
    """Convert ``curve``; ``None`` means no noise was added (infinite epsilon)."""
    if curve is None:
        return DpBudget(math.inf, delta, None)
    return to_approx_dp(curve, delta)


def check_finite(k: int, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteIterateError(
                f"non-finite iterate at iteration {k}; try a smaller step size or noise scale"
            )
