"""Evaluation metrics: accuracy and relevant-feature coverage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

XI_KS = (20, 25, 30, 40)


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    objective: float
    xi: dict[int, float] = field(default_factory=dict)


def accuracy(model: np.ndarray, test) -> float:
    """Fraction of rows with ``sign(x^T s) == l``; a zero score predicts +1."""
    if test.n == 0:
        raise ValueError("accuracy of an empty test set")
    scores = test.features @ np.asarray(model, dtype=float)
    pred = np.where(scores >= 0, 1.0, -1.0)
    return float(np.mean(pred == test.labels))


def xi_coverage(model: np.ndarray, relevant: Iterable[int], k: int) -> float:
    """Share of ``relevant`` coordinates among the ``k`` largest |coefficients|.

    Ties in magnitude go to the lower index.
    """
    model = np.asarray(model, dtype=float)
    relevant = set(int(i) for i in relevant)
    if not relevant:
        raise ValueError("relevant set is empty")
    if not 0 <= k <= model.size:
        raise ValueError(f"k={k} outside 0..{model.size}")
    order = np.lexsort((np.arange(model.size), -np.abs(model)))
    top = set(order[:k].tolist())
    return len(top & relevant) / len(relevant)


def xi_profile(model: np.ndarray, relevant: Iterable[int], ks: Iterable[int] = XI_KS) -> dict[int, float]:
    relevant = list(relevant)
    return {k: xi_coverage(model, relevant, k) for k in ks if k <= len(model)}
