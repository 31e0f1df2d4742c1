"""Closed-form mean/variance estimators and the concentrated log-likelihood.

A *context* binds the training layout (points, response vector, trend
vector) and knows how to assemble the correlation matrix for a given
hyperparameter vector. Three layouts are provided: the plain
squared-exponential kernel over ``d`` length-scales, the PLS-projected
kernels over ``h`` component scales, and the value+gradient block system
used by direct gradient-enhanced kriging.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBreakdownError, UnsupportedKernelError
from .kernels import (
    NUGGET_START,
    TINY,
    CorrelationMatrix,
    KernelSpec,
    symmetric_from_pairs,
    direct_gek_matrix,
    factorize,
    pairwise_sq_diffs,
    projected_sq_dists,
)


@dataclass(frozen=True)
class LikelihoodState:
    R: CorrelationMatrix
    ones: np.ndarray
    y: np.ndarray
    mu: float
    sigma2: float
    alpha: np.ndarray  # R^-1 (y - ones mu)
    cll: float
    degenerate: bool = False
    interp_error: float = 0.0  # largest value-row misfit at the training points, nugget * |alpha|


def _solve_mu_sigma(R: CorrelationMatrix, ones, y):
    ones = np.asarray(ones, dtype=float)
    y = np.asarray(y, dtype=float)
    r_ones = R.solve(ones)
    denom = float(ones @ r_ones)
    if not denom > 0:
        raise NumericalBreakdownError(f"1^T R^-1 1 = {denom:g} is not positive")
    mu = float(r_ones @ y) / denom
    resid = y - ones * mu
    alpha = R.solve(resid)
    sigma2 = float(resid @ alpha) / y.size
    return mu, sigma2, alpha


def estimate_mu_sigma(R: CorrelationMatrix, ones, y) -> tuple[float, float]:
    """Generalized least-squares mean and the process variance, via the Cholesky factor."""
    mu, sigma2, _ = _solve_mu_sigma(R, ones, y)
    return mu, sigma2


def likelihood_state(R: CorrelationMatrix, ones, y) -> LikelihoodState:
    y = np.asarray(y, dtype=float)
    ones = np.asarray(ones, dtype=float)
    mu, sigma2, alpha = _solve_mu_sigma(R, ones, y)
    # prediction at training row i is y_i - nugget * alpha_i
    misfit = R.nugget * float(np.max(np.abs(alpha[ones != 0]), initial=0.0))
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    if sigma2 <= (1e-12 * scale) ** 2 or sigma2 <= 0:
        return LikelihoodState(R, ones, y, mu, max(sigma2, 0.0), alpha, np.inf, True, misfit)
    cll = -0.5 * (y.size * np.log(sigma2) + R.logdet)
    return LikelihoodState(R, ones, y, mu, sigma2, alpha, float(cll), False, misfit)


INTERP_RTOL = 5e-7  # half the interpolation tolerance, leaving room for rounding


class LikelihoodContext:
    """Training layout plus correlation assembly; memoizes the last evaluation."""

    kind = "sqexp"

    def __init__(self, y, ones, nugget: float = NUGGET_START):
        self.y = np.asarray(y, dtype=float)
        self.ones = np.asarray(ones, dtype=float)
        self.nugget = nugget
        values = self.y[self.ones != 0]
        self.interp_tol = INTERP_RTOL * (1.0 + float(np.std(values)))
        self._memo: tuple[bytes, LikelihoodState] | None = None

    @property
    def size(self) -> int:
        return self.y.size

    def correlation(self, theta) -> CorrelationMatrix:
        raise NotImplementedError

    def kernel_spec(self, theta, nugget=None) -> KernelSpec:
        raise NotImplementedError

    def evaluate(self, theta) -> LikelihoodState:
        theta = np.asarray(theta, dtype=float)
        key = theta.tobytes()
        if self._memo is not None and self._memo[0] == key:
            return self._memo[1]
        state = likelihood_state(self.correlation(theta), self.ones, self.y)
        self._memo = (key, state)
        return state


class SqExpContext(LikelihoodContext):
    kind = "sqexp"

    def __init__(self, points, y, nugget: float = NUGGET_START):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(y, np.ones(points.shape[0]), nugget)
        self.points = points
        self.iu, self.sq = pairwise_sq_diffs(points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def correlation(self, theta) -> CorrelationMatrix:
        values = np.maximum(np.exp(-(self.sq @ np.asarray(theta, dtype=float))), TINY)
        return factorize(symmetric_from_pairs(self.points.shape[0], self.iu, values), self.nugget)

    def kernel_spec(self, theta, nugget=None) -> KernelSpec:
        return KernelSpec("sqexp", theta, nugget=self.nugget if nugget is None else nugget)


class ProjectedContext(LikelihoodContext):
    """PLS-projected kernel: ``R = exp(-sum_l theta_l ||C_l o (x - x')||^2)``."""

    def __init__(self, points, y, coeffs, kind: str = "kpls", nugget: float = NUGGET_START):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(y, np.ones(points.shape[0]), nugget)
        self.kind = kind
        self.points = points
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(points.shape[1], -1)
        self.iu = np.triu_indices(points.shape[0], k=1)
        self.proj = projected_sq_dists(points, self.coeffs)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def correlation(self, theta) -> CorrelationMatrix:
        values = np.maximum(np.exp(-(self.proj @ np.asarray(theta, dtype=float))), TINY)
        return factorize(symmetric_from_pairs(self.points.shape[0], self.iu, values), self.nugget)

    def kernel_spec(self, theta, nugget=None) -> KernelSpec:
        return KernelSpec(self.kind, theta, self.coeffs, nugget=self.nugget if nugget is None else nugget)


class DirectGekContext(LikelihoodContext):
    """Values then point-major gradients; the trend vector is zero on gradient rows."""

    def __init__(self, points, values, grads, nugget: float = NUGGET_START, strict: bool = False):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n, d = points.shape
        grads = np.asarray(grads, dtype=float).reshape(n, d)
        y = np.concatenate([np.asarray(values, dtype=float), grads.ravel()])
        ones = np.concatenate([np.ones(n), np.zeros(n * d)])
        super().__init__(y, ones, nugget)
        self.points = points
        self.strict = strict

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def correlation(self, theta) -> CorrelationMatrix:
        return factorize(direct_gek_matrix(np.asarray(theta, float), self.points, self.strict), self.nugget)

    def kernel_spec(self, theta, nugget=None) -> KernelSpec:
        return KernelSpec("sqexp", theta, nugget=self.nugget if nugget is None else nugget,
                          drop_mixed_diagonal=self.strict)


def concentrated_ll(theta, ctx: LikelihoodContext) -> float:
    """``-1/2 [N ln sigma2(theta) + ln det R(theta)]``; ``+inf`` flags a degenerate response."""
    return ctx.evaluate(theta).cll


def feasible_ll(theta, ctx: LikelihoodContext) -> float:
    """Search objective: the concentrated log-likelihood, or ``-inf`` when the
    nugget keeps the model from reproducing its training values to
    ``INTERP_RTOL * (1 + std(y))``."""
    state = ctx.evaluate(theta)
    return state.cll if state.interp_error <= ctx.interp_tol else -np.inf


def concentrated_ll_grad(theta, ctx: SqExpContext) -> np.ndarray:
    """Analytic gradient of the concentrated log-likelihood in the plain kernel's length-scales.

    With ``a = R^-1 (y - 1 mu)`` and ``dR/dtheta_k = -(x_k - x'_k)^2 o R`` off the
    diagonal, ``d cll / d theta_k = sum_{i<j} (x_ik - x_jk)^2 r_ij ([R^-1]_ij - a_i a_j / sigma2)``.
    """
    if not isinstance(ctx, SqExpContext):
        raise UnsupportedKernelError("likelihood gradient is implemented for the plain squared-exponential kernel")
    state = ctx.evaluate(theta)
    if state.degenerate:
        return np.zeros(ctx.dim)
    R = state.R
    r_inv = R.solve(np.eye(R.size))
    i, j = ctx.iu
    weights = R.R[i, j] * (r_inv[i, j] - state.alpha[i] * state.alpha[j] / state.sigma2)
    return ctx.sq.T @ weights
