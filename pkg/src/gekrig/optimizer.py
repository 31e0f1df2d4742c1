"""Bounded hyperparameter search in log10 space.

Both searches maximize. Every evaluated point is tracked so the returned
point is the best one seen, which makes the best-so-far trace monotone
regardless of what the underlying scipy routine reports last.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .doe import Bounds, lhs
from .errors import GekrigError, InvalidArgumentError, OptimizationFailedError

THETA_LOWER = 1e-6
THETA_UPPER = 1e2
DEFAULT_STARTS = 10
BUDGET_PER_DIM = 30
FIRST_START = 0.5


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise InvalidArgumentError("search bounds must be vectors of equal length")
        if np.any(lower <= 0) or np.any(lower >= upper):
            raise InvalidArgumentError("search bounds need 0 < lower < upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def default(cls, dim: int, lower: float = THETA_LOWER, upper: float = THETA_UPPER) -> SearchSpace:
        return cls(np.full(dim, lower), np.full(dim, upper))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def log_bounds(self) -> list[tuple[float, float]]:
        return list(zip(np.log10(self.lower), np.log10(self.upper)))

    def clip(self, theta) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)


@dataclass(frozen=True)
class OptResult:
    theta: np.ndarray
    objective: float
    evals: int
    converged: bool
    grad_evals: int = 0
    trace: list[float] = field(default_factory=list, repr=False)


class _Tracker:
    """Wraps an objective in log10 space: counts calls, keeps the best point, swallows fit failures."""

    def __init__(self, f, space: SearchSpace):
        self.f = f
        self.space = space
        self.evals = 0
        self.best_z = None
        self.best_val = -np.inf
        self.trace: list[float] = []
        self.last_error: Exception | None = None
        self.n_ok = 0

    def theta(self, z) -> np.ndarray:
        return self.space.clip(10.0 ** np.asarray(z, dtype=float))

    def __call__(self, z) -> float:
        z = np.clip(np.asarray(z, dtype=float), np.log10(self.space.lower), np.log10(self.space.upper))
        self.evals += 1
        try:
            val = float(self.f(self.theta(z)))
        except (GekrigError, np.linalg.LinAlgError, FloatingPointError) as exc:
            self.last_error = exc
            val = -np.inf
        if np.isnan(val):
            val = -np.inf
        if val > -np.inf:
            self.n_ok += 1
        if val > self.best_val or self.best_z is None:
            self.best_val, self.best_z = val, z.copy()
        self.trace.append(self.best_val)
        return -val


FAIL_PENALTY = 1e300  # finite stand-in for failed points, avoids inf - inf in the simplex tests


def _initial_simplex(z0: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    step = np.minimum(1.0, 0.25 * (hi - lo))
    simplex = np.tile(z0, (z0.size + 1, 1))
    for k in range(z0.size):
        up = z0[k] + step[k]
        simplex[k + 1, k] = up if up <= hi[k] else z0[k] - step[k]
    return simplex


def start_points(space: SearchSpace, starts: int, seed: int, first=None) -> np.ndarray:
    """log10 start points: ``first`` (default 0.5 everywhere), then a random LHS in log space."""
    lo = np.log10(space.lower)
    hi = np.log10(space.upper)
    first = np.full(space.dim, FIRST_START) if first is None else np.asarray(first, dtype=float)
    points = [np.log10(space.clip(first))]
    rest = starts - 1
    if rest >= 2:
        points.extend(lhs(rest, Bounds(lo, hi), "random", seed).points)
    elif rest == 1:
        points.append(lo + np.random.default_rng(seed).random(space.dim) * (hi - lo))
    return np.array(points)


def maximize_derivative_free(
    f,
    space: SearchSpace,
    budget: int | None = None,
    starts: int = DEFAULT_STARTS,
    seed: int = 0,
    first=None,
) -> OptResult:
    """Multistart bounded Nelder-Mead in log10(theta); ``budget`` is evaluations per start."""
    budget = BUDGET_PER_DIM * space.dim if budget is None else int(budget)
    if budget < space.dim + 2:
        raise InvalidArgumentError(f"budget {budget} below dim + 2 = {space.dim + 2}")
    if starts < 1:
        raise InvalidArgumentError("need at least one start")
    tracker = _Tracker(f, space)
    lo = np.log10(space.lower)
    hi = np.log10(space.upper)
    converged = False
    for z0 in start_points(space, starts, seed, first):
        res = minimize(
            lambda z: min(tracker(z), FAIL_PENALTY),
            z0,
            method="Nelder-Mead",
            bounds=space.log_bounds,
            options={
                "maxfev": budget,
                "initial_simplex": _initial_simplex(z0, lo, hi),
                "xatol": 1e-5,
                "fatol": 1e-9,
            },
        )
        converged = converged or bool(res.success)
    if tracker.n_ok == 0:
        raise OptimizationFailedError("every likelihood evaluation failed", tracker.last_error)
    theta = tracker.theta(tracker.best_z)
    return OptResult(theta, tracker.best_val, tracker.evals, converged, 0, tracker.trace)


def maximize_gradient_based(f, grad_f, theta0, space: SearchSpace, budget: int | None = None) -> OptResult:
    """Bounded L-BFGS-B ascent in log10(theta) from ``theta0``; never returns worse than the start."""
    budget = BUDGET_PER_DIM * space.dim if budget is None else int(budget)
    theta0 = np.asarray(theta0, dtype=float)
    if np.any(theta0 < space.lower * (1 - 1e-12)) or np.any(theta0 > space.upper * (1 + 1e-12)):
        raise InvalidArgumentError("theta0 lies outside the search space")
    tracker = _Tracker(f, space)
    grad_calls = 0
    ln10 = np.log(10.0)

    def fun(z):
        nonlocal grad_calls
        val = tracker(z)
        if not np.isfinite(val):
            return np.inf, np.zeros_like(z)
        grad_calls += 1
        theta = tracker.theta(z)
        g = np.asarray(grad_f(theta), dtype=float)
        if not np.all(np.isfinite(g)):
            raise OptimizationFailedError(f"non-finite likelihood gradient at theta={theta}")
        return val, -g * theta * ln10

    z0 = np.log10(space.clip(theta0))
    res = minimize(fun, z0, jac=True, method="L-BFGS-B", bounds=space.log_bounds,
                   options={"maxfun": budget, "maxiter": budget})
    if tracker.n_ok == 0:
        raise OptimizationFailedError("likelihood evaluation failed at the start point", tracker.last_error)
    theta = tracker.theta(tracker.best_z)
    return OptResult(theta, tracker.best_val, tracker.evals, bool(res.success), grad_calls, tracker.trace)
