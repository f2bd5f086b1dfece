"""Renyi-DP accounting: Gaussian curves, subsampling amplification,
composition, conversion to (epsilon, delta)-DP and noise calibration.

A privacy guarantee is carried around as a :class:`RenyiCurve`, i.e. the
value of epsilon at every order alpha on a fixed grid.  Everything in this
module is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import gammaln

DEFAULT_ALPHAS: tuple[float, ...] = tuple(float(a) for a in range(2, 65))


class AccountingError(ValueError):
    """Base class for invalid accounting requests."""


class InvalidMechanismError(AccountingError):
    pass


class UnsupportedOrderError(AccountingError):
    pass


class InvalidRatioError(AccountingError):
    pass


class GridMismatchError(AccountingError):
    pass


class InfeasibleBudgetError(AccountingError):
    pass


def _check_grid(alphas: Sequence[float]) -> tuple[float, ...]:
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise AccountingError("alpha grid is empty")
    if any(not math.isfinite(a) or a <= 1.0 for a in alphas):
        raise AccountingError("every alpha must be finite and > 1")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise AccountingError("alpha grid must be strictly increasing")
    return alphas


@dataclass(frozen=True)
class RenyiCurve:
    """Epsilon as a function of the Renyi order, sampled on a grid."""

    alphas: tuple[float, ...]
    epsilons: tuple[float, ...]

    def __post_init__(self):
        alphas = _check_grid(self.alphas)
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) != len(alphas):
            raise AccountingError("alphas and epsilons differ in length")
        if any(not math.isfinite(e) or e < 0.0 for e in eps):
            raise AccountingError("epsilons must be finite and non-negative")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def zero(cls, alphas: Sequence[float] = DEFAULT_ALPHAS) -> "RenyiCurve":
        return cls(tuple(alphas), (0.0,) * len(alphas))

    def __len__(self) -> int:
        return len(self.alphas)

    def __getitem__(self, alpha: float) -> float:
        try:
            return self.epsilons[self.alphas.index(float(alpha))]
        except ValueError:
            raise KeyError(alpha) from None

    def items(self):
        return zip(self.alphas, self.epsilons)

    def scaled(self, factor: float) -> "RenyiCurve":
        """Curve of ``factor`` sequential copies (``factor`` >= 0)."""
        if factor < 0:
            raise AccountingError("composition count must be non-negative")
        return RenyiCurve(self.alphas, tuple(factor * e for e in self.epsilons))

    def to_rows(self) -> list[tuple[float, float]]:
        return list(self.items())

    def to_csv(self) -> str:
        lines = ["alpha,epsilon"]
        lines += [f"{a!r},{e!r}" for a, e in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "RenyiCurve":
        alphas, eps = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("alpha"):
                continue
            a, e = line.split(",")
            alphas.append(float(a))
            eps.append(float(e))
        return cls(tuple(alphas), tuple(eps))


@dataclass(frozen=True)
class GaussianMechanismSpec:
    sensitivity: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0) or not math.isfinite(self.sigma):
            raise InvalidMechanismError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.sensitivity) or self.sensitivity < 0:
            raise InvalidMechanismError(
                f"sensitivity must be finite and >= 0, got {self.sensitivity}"
            )

    def rdp(self, alpha: float) -> float:
        return 0.5 * alpha * (self.sensitivity / self.sigma) ** 2


@dataclass(frozen=True)
class DpBudget:
    epsilon: float
    delta: float
    alpha: float | None = None  # order attaining the minimum, when converted

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise AccountingError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.epsilon >= 0.0:
            raise AccountingError(f"epsilon must be >= 0, got {self.epsilon}")


def gaussian_rdp(
    spec: GaussianMechanismSpec, alpha_grid: Sequence[float] = DEFAULT_ALPHAS
) -> RenyiCurve:
    """RDP curve of releasing ``q(D) + N(0, sigma^2 I)``."""
    alphas = _check_grid(alpha_grid)
    return RenyiCurve(alphas, tuple(spec.rdp(a) for a in alphas))


def _log_comb(n: int, k: int) -> float:
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def _log_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = max(a, b), min(a, b)
    return hi + math.log1p(math.exp(lo - hi))


def subsampled_rdp(base: Callable[[int], float], q: float, alpha: int) -> float:
    """Amplified RDP at integer order ``alpha`` of a mechanism run on a
    uniformly subsampled (without replacement) fraction ``q`` of the data.

    ``base(j)`` must return the RDP of the mechanism on the subsample at
    every integer order ``2 <= j <= alpha``.  The bound is

        1/(alpha-1) * log(1 + q^2 C(alpha,2) min(4(e^eps(2) - 1), 2 e^eps(2))
                          + sum_{j=3}^alpha q^j C(alpha,j) 2 e^{(j-1) eps(j)})

    evaluated in log space.
    """
    if not 0.0 <= q <= 1.0:
        raise InvalidRatioError(f"sampling ratio must lie in [0, 1], got {q}")
    if int(alpha) != alpha or alpha < 3:
        raise UnsupportedOrderError(f"order must be an integer >= 3, got {alpha}")
    alpha = int(alpha)
    if q == 0.0:
        return 0.0
    log_q = math.log(q)

    eps2 = float(base(2))
    if eps2 <= 0.0:
        log_first = -math.inf
    else:
        # log(e^eps2 - 1), via expm1 where cancellation matters
        log_em1 = math.log(math.expm1(eps2)) if eps2 < 1.0 else eps2 + math.log1p(-math.exp(-eps2))
        log_first = min(math.log(2.0) + eps2, math.log(4.0) + log_em1)
    # log of everything but the leading 1
    log_rest = 2 * log_q + _log_comb(alpha, 2) + log_first
    for j in range(3, alpha + 1):
        term = j * log_q + _log_comb(alpha, j) + math.log(2.0) + (j - 1) * float(base(j))
        log_rest = _log_add(log_rest, term)

    if log_rest == -math.inf:
        return 0.0
    # log(1 + e^L) without losing digits at either extreme
    if log_rest < 0:
        total = math.log1p(math.exp(log_rest))
    else:
        total = log_rest + math.log1p(math.exp(-log_rest))
    return total / (alpha - 1)


def subsampled_gaussian_rdp(
    spec: GaussianMechanismSpec, q: float, alpha_grid: Sequence[float] = DEFAULT_ALPHAS
) -> RenyiCurve:
    """Per-step curve of a (possibly subsampled) Gaussian mechanism.

    With ``q == 1`` no amplification applies and the plain Gaussian curve is
    returned.  Order 2 is not covered by the subsampling bound; for it the
    curve uses the order-3 value, which is valid since RDP is monotone in
    alpha.  Non-integer orders are rejected when ``q < 1``.
    """
    alphas = _check_grid(alpha_grid)
    if not 0.0 <= q <= 1.0:
        raise InvalidRatioError(f"sampling ratio must lie in [0, 1], got {q}")
    if q == 1.0:
        return gaussian_rdp(spec, alphas)
    cache: dict[int, float] = {}

    def at(a: float) -> float:
        if int(a) != a:
            raise UnsupportedOrderError(f"subsampled accounting needs integer orders, got {a}")
        a = max(int(a), 3)
        if a not in cache:
            cache[a] = subsampled_rdp(spec.rdp, q, a)
        return cache[a]

    return RenyiCurve(alphas, tuple(at(a) for a in alphas))


def compose(
    curves: Iterable[RenyiCurve], alpha_grid: Sequence[float] = DEFAULT_ALPHAS
) -> RenyiCurve:
    """Sequential composition: pointwise sum over a shared grid.

    An empty list composes to the zero curve on ``alpha_grid``.
    """
    curves = list(curves)
    if not curves:
        return RenyiCurve.zero(alpha_grid)
    grid = curves[0].alphas
    for c in curves[1:]:
        if c.alphas != grid:
            raise GridMismatchError("curves are defined on different alpha grids")
    total = np.zeros(len(grid))
    for c in curves:
        total += np.asarray(c.epsilons)
    return RenyiCurve(grid, tuple(total.tolist()))


def to_approx_dp(curve: RenyiCurve, delta: float) -> DpBudget:
    """Smallest ``eps(alpha) + log(1/delta)/(alpha-1)`` over the grid."""
    if not 0.0 < delta < 1.0:
        raise AccountingError(f"delta must lie in (0, 1), got {delta}")
    if len(curve) == 0:
        raise AccountingError("empty curve")
    log_inv_delta = -math.log(delta)
    best, best_alpha = math.inf, None
    for a, e in curve.items():
        value = e + log_inv_delta / (a - 1.0)
        if value <= best:
            best, best_alpha = value, a
    return DpBudget(best, delta, best_alpha)


def iterated_gaussian_curve(
    sigma: float,
    sensitivity: float,
    iterations: int,
    q: float = 1.0,
    alpha_grid: Sequence[float] = DEFAULT_ALPHAS,
) -> RenyiCurve:
    """``iterations`` compositions of one (subsampled) Gaussian step."""
    step = subsampled_gaussian_rdp(GaussianMechanismSpec(sensitivity, sigma), q, alpha_grid)
    return step.scaled(iterations)


def calibrate_sigma(
    target: DpBudget,
    iterations: int,
    q: float,
    sensitivity: float,
    alpha_grid: Sequence[float] = DEFAULT_ALPHAS,
    rtol: float = 1e-3,
) -> float:
    """Smallest noise scale (to relative tolerance ``rtol``) whose accounted
    epsilon after ``iterations`` steps is at most ``target.epsilon``.

    The returned sigma is always on the feasible side of the bisection.
    """
    if not target.epsilon > 0:
        raise AccountingError("target epsilon must be positive")
    if iterations < 1:
        raise AccountingError("iterations must be >= 1")
    if not sensitivity > 0:
        raise AccountingError("sensitivity must be positive")

    def spent(sigma: float) -> float:
        curve = iterated_gaussian_curve(sigma, sensitivity, iterations, q, alpha_grid)
        return to_approx_dp(curve, target.delta).epsilon

    lo, hi = 1e-6 * sensitivity, 1e6 * sensitivity
    if spent(hi) > target.epsilon:
        raise InfeasibleBudgetError(
            f"no sigma <= {hi:g} reaches epsilon={target.epsilon} at delta={target.delta}"
        )
    if spent(lo) <= target.epsilon:
        return lo
    # invariant: lo infeasible, hi feasible
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if spent(mid) <= target.epsilon:
            hi = mid
        else:
            lo = mid
    return hi
