"""Gaussian correlation functions and correlation-matrix assembly.

Three variants share one closed form. The plain squared-exponential kernel
has one length-scale per input. The PLS-projected kernels carry ``h``
hyperparameters and a ``d x h`` coefficient matrix ``C``; they equal the
plain kernel with ``eta_i = sum_l theta_l C_il**2``, which is what the
vectorized assembly uses. Inputs are expected in the unit cube.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.linalg import cho_solve
from scipy.spatial.distance import cdist, pdist

from .errors import IllConditionedError, InvalidKernelError, UnsupportedKernelError

KernelKind = Literal["sqexp", "kpls", "gekpls"]

NUGGET_START = 10.0 * np.finfo(float).eps  # ~2.2e-15; 1e-10 swamps the FOTA pair contrast
NUGGET_FACTOR = 100.0
NUGGET_CAP = 1e-4
TINY = 1e-300


@dataclass(frozen=True)
class KernelSpec:
    """Correlation function with its hyperparameters.

    ``coeffs`` is ``None`` for ``"sqexp"``, the PLS rotation ``W*`` for
    ``"kpls"`` and the averaged absolute local rotations for ``"gekpls"``.
    ``drop_mixed_diagonal`` makes the gradient-gradient block drop the
    ``2 theta_k delta_kl r`` term (not a valid covariance; reference only).
    """

    kind: KernelKind
    theta: np.ndarray
    coeffs: np.ndarray | None = None
    nugget: float = NUGGET_START
    drop_mixed_diagonal: bool = False

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 1 or theta.size == 0:
            raise InvalidKernelError("theta must be a non-empty vector")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise InvalidKernelError(f"theta must be positive and finite, got {theta}")
        if not (np.isfinite(self.nugget) and self.nugget >= 0):
            raise InvalidKernelError("nugget must be a finite nonnegative number")
        if self.kind == "sqexp":
            if self.coeffs is not None:
                raise InvalidKernelError("the squared-exponential kernel takes no coefficients")
        elif self.kind in ("kpls", "gekpls"):
            coeffs = np.asarray(self.coeffs, dtype=float)
            if coeffs.ndim == 1:
                coeffs = coeffs[:, None]
            if coeffs.ndim != 2 or coeffs.shape[1] != theta.size:
                raise InvalidKernelError(f"coefficients must be d x h with h = {theta.size}")
            if not np.all(np.isfinite(coeffs)):
                raise InvalidKernelError("kernel coefficients must be finite")
            object.__setattr__(self, "coeffs", coeffs)
        else:
            raise InvalidKernelError(f"unknown kernel kind {self.kind!r}")

    @property
    def h(self) -> int:
        return self.theta.size

    def effective_theta(self) -> np.ndarray:
        """Per-input length-scale parameters of the equivalent plain kernel."""
        if self.kind == "sqexp":
            return self.theta
        return (self.coeffs**2) @ self.theta

    def with_theta(self, theta) -> KernelSpec:
        return replace(self, theta=np.asarray(theta, dtype=float))


def correlate(spec: KernelSpec, x, x2) -> float:
    """Correlation between two points, evaluated in the kernel's own form."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    diff = x - x2
    if spec.kind == "sqexp":
        expo = -np.sum(spec.theta * diff**2)
    else:
        # product over components of exp(-theta_l * ||C_l o (x - x')||^2)
        expo = -np.sum(spec.theta * np.sum((spec.coeffs * diff[:, None]) ** 2, axis=0))
    return max(float(np.exp(expo)), TINY)


def correlate_grad_blocks(spec: KernelSpec, xi, xj):
    """Derivatives of r(xi, xj): wrt xi, wrt xj, and the mixed d x d block."""
    if spec.kind != "sqexp":
        raise UnsupportedKernelError("derivative blocks are defined for the squared-exponential kernel only")
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    theta = spec.theta
    r = correlate(spec, xi, xj)
    delta = xi - xj
    d_i = -2.0 * theta * delta * r
    d_j = -d_i
    mixed = -4.0 * np.outer(theta * delta, theta * delta) * r
    if not spec.drop_mixed_diagonal:
        mixed = mixed + np.diag(2.0 * theta * r)
    return d_i, d_j, mixed


@dataclass(frozen=True)
class CorrelationMatrix:
    R: np.ndarray
    chol: np.ndarray
    logdet: float
    nugget: float

    @property
    def size(self) -> int:
        return self.R.shape[0]

    def solve(self, b) -> np.ndarray:
        return cho_solve((self.chol, True), b, check_finite=False)


def nugget_ladder(start: float = NUGGET_START) -> list[float]:
    """Nuggets tried in order: ``start``, then x100 steps, always ending at the cap."""
    if start >= NUGGET_CAP:
        return [float(start)]
    steps = [float(start)]
    nug = start if start > 0 else NUGGET_START / NUGGET_FACTOR
    while nug * NUGGET_FACTOR < NUGGET_CAP * (1 - 1e-9):
        nug *= NUGGET_FACTOR
        steps.append(float(nug))
    steps.append(NUGGET_CAP)
    return steps


def factorize(R0: np.ndarray, nugget: float = NUGGET_START) -> CorrelationMatrix:
    """Cholesky factor of ``R0 + nugget I``, escalating the nugget on failure."""
    eye = np.eye(R0.shape[0])
    for nug in nugget_ladder(nugget):
        R = R0 + nug * eye
        try:
            chol = np.linalg.cholesky(R)
        except np.linalg.LinAlgError:
            continue
        diag = np.diag(chol)
        if np.all(diag > 0) and np.all(np.isfinite(diag)):
            return CorrelationMatrix(R, chol, 2.0 * float(np.sum(np.log(diag))), nug)
    with np.errstate(all="ignore"):
        try:
            cond = float(np.linalg.cond(R0))
        except np.linalg.LinAlgError:
            cond = float("inf")
    raise IllConditionedError(f"Cholesky failed up to nugget {nug:g}", cond, nug)


def pairwise_sq_diffs(points: np.ndarray) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    """Upper-triangle index pair and per-dimension squared differences (npairs x d)."""
    points = np.asarray(points, dtype=float)
    iu = np.triu_indices(points.shape[0], k=1)
    return iu, (points[iu[0]] - points[iu[1]]) ** 2


def projected_sq_dists(points: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Squared distances between projected points ``C_l o x``, one column per component."""
    points = np.asarray(points, dtype=float)
    return np.column_stack([pdist(points * coeffs[:, l], "sqeuclidean") for l in range(coeffs.shape[1])])


def symmetric_from_pairs(n: int, iu, values: np.ndarray) -> np.ndarray:
    R = np.eye(n)
    R[iu] = values
    R[iu[1], iu[0]] = values
    return R


def assemble_R(spec: KernelSpec, points) -> CorrelationMatrix:
    """Correlation matrix of ``points`` under ``spec`` with nugget escalation."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    iu, sq = pairwise_sq_diffs(points)
    values = np.maximum(np.exp(-(sq @ spec.effective_theta())), TINY)
    return factorize(symmetric_from_pairs(n, iu, values), spec.nugget)


def direct_gek_matrix(theta: np.ndarray, points: np.ndarray, strict: bool = False) -> np.ndarray:
    """Un-nuggeted n(d+1) block matrix: values first, then point-major gradients."""
    n, d = points.shape
    delta = points[:, None, :] - points[None, :, :]          # n x n x d, delta[i, j] = x_i - x_j
    r = np.maximum(np.exp(-np.einsum("ijk,k->ij", delta**2, theta)), TINY)
    # value(i) vs gradient(j, l): dr(x_i, x_j)/dx_j,l
    vg = (2.0 * theta * delta * r[:, :, None]).reshape(n, n * d)
    # gradient(i, k) vs gradient(j, l)
    td = theta * delta
    gg = -4.0 * td[:, :, :, None] * td[:, :, None, :] * r[:, :, None, None]
    if not strict:
        gg = gg + 2.0 * np.eye(d) * theta[:, None] * r[:, :, None, None]
    gg = gg.transpose(0, 2, 1, 3).reshape(n * d, n * d)
    top = np.hstack([r, vg])
    bottom = np.hstack([vg.T, gg])
    return np.vstack([top, bottom])


def assemble_R_direct_gek(spec: KernelSpec, points) -> CorrelationMatrix:
    """Block correlation matrix of values and gradients (size n(d+1))."""
    if spec.kind != "sqexp":
        raise UnsupportedKernelError("direct gradient-enhanced kriging needs the squared-exponential kernel")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    R0 = direct_gek_matrix(spec.theta, points, spec.drop_mixed_diagonal)
    return factorize(R0, spec.nugget)


def correlate_vec(spec: KernelSpec, x, points) -> np.ndarray:
    """Correlations between ``x`` (a point or a batch of rows) and every training point."""
    x = np.asarray(x, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    scale = np.sqrt(spec.effective_theta())
    r = np.maximum(np.exp(-cdist(np.atleast_2d(x) * scale, points * scale, "sqeuclidean")), TINY)
    return r[0] if x.ndim == 1 else r


def correlate_vec_gek(spec: KernelSpec, x, points) -> np.ndarray:
    """Correlation of ``x`` with training values then with training gradients (length n(d+1))."""
    if spec.kind != "sqexp":
        raise UnsupportedKernelError("direct gradient-enhanced kriging needs the squared-exponential kernel")
    x = np.asarray(x, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    xb = np.atleast_2d(x)
    delta = xb[:, None, :] - points[None, :, :]           # m x n x d, x - x_i
    r = np.maximum(np.exp(-(delta**2 @ spec.theta)), TINY)
    grad = (2.0 * spec.theta * delta * r[:, :, None]).reshape(xb.shape[0], -1)
    out = np.hstack([r, grad])
    return out[0] if x.ndim == 1 else out
