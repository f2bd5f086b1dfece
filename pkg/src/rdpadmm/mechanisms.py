"""Seeded Gaussian noise and per-example L2 clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# stream tags; keep distinct so noise and sampling never share a stream
TAG_GRADIENT = 0
TAG_X = 1
TAG_Z = 2
TAG_Y = 3
TAG_BATCH = 7


@dataclass
class NoiseSource:
    """Counter-based random stream keyed by ``(seed, *stream, step, tag)``.

    Every draw is reproducible from its key alone, so a run can be replayed
    or split into independent sub-streams (``spawn``) without coordination.
    Not meant to be shared between threads; spawn one per worker instead.
    """

    seed: int
    stream: tuple[int, ...] = ()
    position: int = field(default=0, compare=False)

    def spawn(self, *key: int) -> "NoiseSource":
        return NoiseSource(self.seed, self.stream + tuple(int(k) for k in key))

    def generator(self, step: int, tag: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=self.stream + (int(step), int(tag)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def next_step(self) -> int:
        step = self.position
        self.position += 1
        return step


def gaussian_vector(
    source: NoiseSource,
    dim: int,
    sigma: float,
    step: int | None = None,
    tag: int = TAG_GRADIENT,
) -> np.ndarray:
    """Draw ``N(0, sigma^2 I_dim)``.

    When ``step`` is omitted the source's position counter is used and
    advanced.
    """
    if dim < 1:
        raise ValueError("cannot draw an empty noise vector")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if step is None:
        step = source.next_step()
    if sigma == 0:
        return np.zeros(dim)
    return sigma * source.generator(step, tag).standard_normal(dim)


def clip_l2(v: np.ndarray, C: float) -> np.ndarray:
    """Rescale ``v`` to have L2 norm at most ``C``."""
    if not C > 0:
        raise ValueError(f"clip bound must be positive, got {C}")
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= C:
        return v.copy()
    return v * (C / norm)


def clip_rows(G: np.ndarray, C: float) -> np.ndarray:
    """Row-wise :func:`clip_l2` for a stack of per-example gradients."""
    if not C > 0:
        raise ValueError(f"clip bound must be positive, got {C}")
    G = np.asarray(G, dtype=float)
    norms = np.linalg.norm(G, axis=-1, keepdims=True)
    scale = np.minimum(1.0, C / np.maximum(norms, np.finfo(float).tiny))
    return G * scale
