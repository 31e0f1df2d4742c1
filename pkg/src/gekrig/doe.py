"""Sampling plans and local displacement designs.

Latin hypercube plans are drawn in the unit cube and mapped onto the
physical bounds. The maximin variant keeps the best plan out of a pool of
random Latin hypercubes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Literal

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InvalidArgumentError

Criterion = Literal["maximin", "random"]

#: number of random Latin hypercubes screened by the maximin criterion
MAXIMIN_POOL = 50


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise InvalidArgumentError("bounds must be two vectors of equal length d >= 1")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidArgumentError("bounds must be finite")
        if np.any(lower >= upper):
            raise InvalidArgumentError("degenerate bounds: lower must be < upper in every dimension")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, d: int, lo: float, hi: float) -> Bounds:
        return cls(np.full(d, float(lo)), np.full(d, float(hi)))

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def from_unit(self, u):
        return self.lower + np.asarray(u, dtype=float) * self.span

    def contains(self, x, rtol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        slack = rtol * self.span
        return bool(np.all(x >= self.lower - slack) and np.all(x <= self.upper + slack))


@dataclass(frozen=True)
class SamplingPlan:
    points: np.ndarray
    criterion: Criterion
    seed: int
    # min pairwise distance (unit cube) of every candidate screened, chosen one included
    pool_scores: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True)
class DisplacementSet:
    offsets: np.ndarray
    kind: Literal["box_behnken", "forward_backward"]


def _random_lhs(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    return (strata + rng.random((n, d))) / n


def min_distance(points: np.ndarray) -> float:
    """Smallest pairwise Euclidean distance between the rows of ``points``."""
    if len(points) < 2:
        return np.inf
    return float(pdist(points).min())


def candidate_pool(n: int, d: int, seed: int, pool: int = MAXIMIN_POOL) -> list[np.ndarray]:
    """The unit-cube candidate plans the maximin criterion chooses from."""
    rng = np.random.default_rng(seed)
    return [_random_lhs(n, d, rng) for _ in range(pool)]


def lhs(
    n: int,
    bounds: Bounds,
    criterion: Criterion = "maximin",
    seed: int = 0,
    pool: int = MAXIMIN_POOL,
) -> SamplingPlan:
    """Latin hypercube plan of ``n`` points inside ``bounds``.

    With ``criterion="maximin"`` the plan with the largest minimum pairwise
    distance among ``pool`` random Latin hypercubes is returned; ``"random"``
    returns a single random Latin hypercube.
    """
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2 samples, got {n}")
    if criterion not in ("maximin", "random"):
        raise InvalidArgumentError(f"unknown criterion {criterion!r}")
    d = bounds.d
    if criterion == "random":
        unit = _random_lhs(n, d, np.random.default_rng(seed))
        scores = np.array([min_distance(unit)])
    else:
        if pool < 1:
            raise InvalidArgumentError("maximin pool must hold at least one plan")
        candidates = candidate_pool(n, d, seed, pool)
        scores = np.array([min_distance(c) for c in candidates])
        unit = candidates[int(np.argmax(scores))]
    return SamplingPlan(bounds.from_unit(unit), criterion, seed, scores)


def displacement_set(d: int) -> DisplacementSet:
    """Unit offsets around a sample: Box-Behnken edges for d >= 3, else +-e_j."""
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    if d >= 3:
        pairs = list(combinations(range(d), 2))
        offsets = np.zeros((4 * len(pairs), d))
        row = 0
        for j, k in pairs:
            for sj, sk in product((1.0, -1.0), repeat=2):
                offsets[row, j] = sj
                offsets[row, k] = sk
                row += 1
        return DisplacementSet(offsets, "box_behnken")
    eye = np.eye(d)
    offsets = np.empty((2 * d, d))
    offsets[0::2] = eye
    offsets[1::2] = -eye
    return DisplacementSet(offsets, "forward_backward")
