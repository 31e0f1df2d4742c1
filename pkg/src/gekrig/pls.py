"""Single-response partial least squares with deflation.

Only what the PLS-projected kernels need: weights, loadings, scores and
the rotation ``W (P^T W)^-1`` that expresses every component directly in
the original coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResponseError, InvalidArgumentError, SingularRotationError

_ZERO = 1e-12


@dataclass(frozen=True)
class PlsDecomposition:
    W: np.ndarray      # d x h weights, unit columns
    P: np.ndarray      # d x h loadings
    Wstar: np.ndarray  # d x h rotation coefficients
    t: np.ndarray      # n x h scores
    c: np.ndarray      # h inner regression coefficients of y on each score
    x_mean: np.ndarray
    y_mean: float

    @property
    def h(self) -> int:
        return self.W.shape[1]

    @property
    def coef(self) -> np.ndarray:
        """Linear-model coefficients on centered inputs: ``y - y_mean ~ (x - x_mean) @ coef``."""
        return self.Wstar @ self.c

    def predict(self, X) -> np.ndarray:
        return self.y_mean + (np.atleast_2d(X) - self.x_mean) @ self.coef


def _canonical_sign(w: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(w) > _ZERO * np.abs(w).max())
    if big.size and w[big[0]] < 0:
        return -w
    return w


def fit_pls(X, y, h: int) -> PlsDecomposition:
    """Fit ``h`` PLS components to centered ``(X, y)``.

    Each weight vector is the normalized covariance direction
    ``X_res^T y_res``, the closed-form maximizer of the squared covariance for
    a single response. When the response residual is exhausted before ``h``
    components, the remaining weights fall back to the leading right singular
    vector of the input residual so the scores stay orthogonal.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise InvalidArgumentError("X must be n x d with one response per row")
    n, d = X.shape
    if not 1 <= h <= min(n - 1, d):
        raise InvalidArgumentError(f"h={h} must satisfy 1 <= h <= min(n-1, d) = {min(n - 1, d)}")
    if not np.any(X != X[0]):
        raise InvalidArgumentError("X needs at least two distinct rows")

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xr = X - x_mean
    yr = y - y_mean
    y_scale = np.abs(y).max() + np.abs(yr).max()
    if np.abs(yr).max() <= _ZERO * y_scale:
        raise DegenerateResponseError("response has zero variance; PLS directions are undefined")
    x_norm = np.linalg.norm(Xr)

    W = np.zeros((d, h))
    P = np.zeros((d, h))
    T = np.zeros((n, h))
    c = np.zeros(h)
    for comp in range(h):
        w = Xr.T @ yr
        if np.linalg.norm(w) <= _ZERO * x_norm * np.linalg.norm(y - y_mean):
            w = np.linalg.svd(Xr, full_matrices=False)[2][0]
        w = _canonical_sign(w / np.linalg.norm(w))
        t = Xr @ w
        tt = t @ t
        if tt <= _ZERO * x_norm**2:
            raise SingularRotationError(f"component {comp + 1} has a null score vector")
        p = Xr.T @ t / tt
        c[comp] = yr @ t / tt
        Xr = Xr - np.outer(t, p)
        yr = yr - c[comp] * t
        W[:, comp], P[:, comp], T[:, comp] = w, p, t

    PtW = P.T @ W
    cond = np.linalg.cond(PtW)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularRotationError("P^T W is singular", cond)
    Wstar = W @ np.linalg.inv(PtW)
    return PlsDecomposition(W, P, Wstar, T, c, x_mean, y_mean)
