"""Fit and predict for kriging, KPLS, KPLSK, indirect/direct GEK and GE-KPLS.

All models work in inputs scaled to the unit cube by the training bounds;
gradients are rescaled accordingly (``dy/du = dy/dx * span``). A fitted
model is an immutable :class:`FittedSurrogate`.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import solve_triangular

from .doe import Bounds, displacement_set
from .errors import DegenerateResponseError, InvalidArgumentError, TooLargeError
from .kernels import NUGGET_START, KernelSpec, correlate_vec, correlate_vec_gek
from .likelihood import (
    DirectGekContext,
    LikelihoodContext,
    ProjectedContext,
    SqExpContext,
    concentrated_ll,
    concentrated_ll_grad,
    feasible_ll,
)
from .optimizer import (
    BUDGET_PER_DIM,
    DEFAULT_STARTS,
    THETA_LOWER,
    THETA_UPPER,
    SearchSpace,
    maximize_derivative_free,
    maximize_gradient_based,
)
from .pls import fit_pls

ModelKind = Literal["kriging", "kpls", "kplsk", "gek_indirect", "gek_direct", "gekpls"]
MODEL_KINDS: tuple[str, ...] = ("kriging", "kpls", "kplsk", "gek_indirect", "gek_direct", "gekpls")
GRADIENT_MODELS = frozenset({"gek_indirect", "gek_direct", "gekpls"})

FORMAT_VERSION = "gekrig-model/1"
DEFAULT_FOTA_STEP = 1e-4
MAX_ROWS = 3000
ETA_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainingData:
    X: np.ndarray
    y: np.ndarray
    bounds: Bounds
    dY: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise InvalidArgumentError("X and y hold different numbers of samples")
        if X.shape[1] != self.bounds.d:
            raise InvalidArgumentError("X columns do not match the bounds dimension")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("training data must be finite")
        if np.unique(X, axis=0).shape[0] != X.shape[0]:
            raise InvalidArgumentError("training points must be distinct")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.dY is not None:
            dY = np.asarray(self.dY, dtype=float).reshape(X.shape)
            if not np.all(np.isfinite(dY)):
                raise InvalidArgumentError("gradients must be finite")
            object.__setattr__(self, "dY", dY)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def U(self) -> np.ndarray:
        return self.bounds.to_unit(self.X)

    @property
    def dU(self) -> np.ndarray:
        if self.dY is None:
            raise InvalidArgumentError("this model needs gradients (dY) in the training data")
        return self.dY * self.bounds.span


@dataclass(frozen=True)
class FitOptions:
    """Hyperparameter-search knobs shared by every model."""

    theta_lower: float = THETA_LOWER
    theta_upper: float = THETA_UPPER
    starts: int = DEFAULT_STARTS
    budget_per_dim: int = BUDGET_PER_DIM
    seed: int = 0
    nugget: float = NUGGET_START
    max_rows: int = MAX_ROWS
    drop_mixed_diagonal: bool = False


@dataclass(frozen=True)
class GeKplsConfig:
    h: int = 1
    m: int = 1
    fota_step: float = DEFAULT_FOTA_STEP

    def __post_init__(self):
        if self.h < 1:
            raise InvalidArgumentError("GE-KPLS needs h >= 1")
        if self.m < 1:
            raise InvalidArgumentError("GE-KPLS needs m >= 1 extra points")
        if not 0 < self.fota_step < 0.1:
            raise InvalidArgumentError("fota_step must lie in (0, 0.1)")


@dataclass(frozen=True)
class FittedSurrogate:
    kind: ModelKind
    spec: KernelSpec
    mu: float
    sigma2: float
    bounds: Bounds
    points: np.ndarray          # physical coordinates, FOTA points included
    responses: np.ndarray       # one value per point
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    gradients: np.ndarray | None = field(default=None, repr=False)  # direct GEK only, physical
    meta: dict = field(default_factory=dict)

    @property
    def theta(self) -> np.ndarray:
        return self.spec.theta

    @property
    def nugget(self) -> float:
        return self.spec.nugget

    @property
    def _unit_points(self) -> np.ndarray:
        return self.bounds.to_unit(self.points)

    @property
    def _trend(self) -> np.ndarray:
        if self.kind == "gek_direct":
            n, d = self.points.shape
            return np.concatenate([np.ones(n), np.zeros(n * d)])
        return np.ones(self.points.shape[0])

    def _corr(self, U: np.ndarray) -> np.ndarray:
        if self.kind == "gek_direct":
            return correlate_vec_gek(self.spec, U, self._unit_points)
        return correlate_vec(self.spec, U, self._unit_points)

    def predict(self, X, chunk: int = 1000) -> np.ndarray | float:
        """Best linear unbiased predictor at one point or at each row of ``X``."""
        X = np.asarray(X, dtype=float)
        U = np.atleast_2d(self.bounds.to_unit(X))
        out = np.concatenate([self.mu + self._corr(U[i:i + chunk]) @ self.alpha
                              for i in range(0, U.shape[0], chunk)])
        return float(out[0]) if X.ndim == 1 else out

    def predict_variance(self, X) -> np.ndarray | float:
        """Ordinary-kriging prediction variance, including the constant-trend term."""
        X = np.asarray(X, dtype=float)
        U = np.atleast_2d(self.bounds.to_unit(X))
        r = self._corr(U)
        F = self._trend
        v = solve_triangular(self.chol, r.T, lower=True, check_finite=False)
        vf = solve_triangular(self.chol, F, lower=True, check_finite=False)
        trend = 1.0 - vf @ v
        s2 = self.sigma2 * (1.0 - np.sum(v**2, axis=0) + trend**2 / (vf @ vf))
        self._stored_point_variance(U, s2)
        s2 = np.maximum(s2, 0.0)
        return float(s2[0]) if X.ndim == 1 else s2

    def _stored_point_variance(self, U: np.ndarray, s2: np.ndarray) -> None:
        # At a stored point r = R e_i - nu e_i, so the variance collapses to
        # sigma2 * (nu - nu^2 [R^-1]_ii + (nu (R^-1 F)_i)^2 / F'R^-1 F). The generic
        # formula loses this to cancellation in 1 - v'v.
        index = {row.tobytes(): i for i, row in enumerate(self._unit_points)}
        hits = [(k, index[u.tobytes()]) for k, u in enumerate(U) if u.tobytes() in index]
        if not hits:
            return
        F = self._trend
        nu = self.nugget
        rows = [i for _, i in hits]
        e = np.zeros((F.size, len(rows)))
        e[rows, np.arange(len(rows))] = 1.0
        ve = solve_triangular(self.chol, e, lower=True, check_finite=False)
        vf = solve_triangular(self.chol, F, lower=True, check_finite=False)
        rinv_diag = np.sum(ve**2, axis=0)
        rinv_f = ve.T @ vf
        exact = self.sigma2 * (nu - nu**2 * rinv_diag + (nu * rinv_f) ** 2 / (vf @ vf))
        s2[[k for k, _ in hits]] = exact


# --- shared machinery ---------------------------------------------------------


def fota_extrapolate(x, y: float, g, offset) -> float:
    """First-order Taylor value at ``x + offset`` from the value and gradient at ``x``."""
    return float(y + np.dot(np.asarray(g, dtype=float), np.asarray(offset, dtype=float)))


def top_m_directions(coeffs, m: int) -> np.ndarray:
    """Indices of the ``m`` largest ``|coeffs|``; ties go to the lower index."""
    return np.argsort(-np.abs(np.asarray(coeffs, dtype=float)), kind="stable")[:m]


def _search(ctx: LikelihoodContext, dim: int, options: FitOptions):
    space = SearchSpace.default(dim, options.theta_lower, options.theta_upper)
    return maximize_derivative_free(
        lambda th: feasible_ll(th, ctx), space,
        budget=options.budget_per_dim * dim, starts=options.starts, seed=options.seed,
    )


def _check_response(y: np.ndarray):
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateResponseError("training responses are constant")


def _build(kind, ctx: LikelihoodContext, theta, bounds, points, responses, meta, gradients=None):
    spec = ctx.kernel_spec(theta)
    state = ctx.evaluate(spec.theta)
    spec = ctx.kernel_spec(spec.theta, nugget=state.R.nugget)
    meta = {**meta, "nugget": state.R.nugget, "cll": state.cll, "n_rows": ctx.size}
    return FittedSurrogate(kind, spec, state.mu, state.sigma2, bounds, np.asarray(points, float),
                           np.asarray(responses, float), state.R.chol, state.alpha, gradients, meta)


def _cap(rows: int, options: FitOptions):
    if rows > options.max_rows:
        raise TooLargeError(
            f"augmented system has {rows} rows, above the cap of {options.max_rows}; "
            "gradient-enhanced kriging memory grows with n(d+1)"
        )


# --- models ------------------------------------------------------------------


def fit_kriging(data: TrainingData, options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Ordinary kriging with one Gaussian length-scale per input."""
    t0 = time.perf_counter()
    if data.n < 2:
        raise InvalidArgumentError("kriging needs n >= 2 samples")
    _check_response(data.y)
    ctx = SqExpContext(data.U, data.y, options.nugget)
    res = _search(ctx, data.d, options)
    meta = {"h": None, "m": None, "fota_step": None, "evals": res.evals}
    model = _build("kriging", ctx, res.theta, data.bounds, data.X, data.y, meta)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def _kpls_stage(data: TrainingData, h: int, options: FitOptions):
    if not 1 <= h <= min(data.n - 1, data.d):
        raise InvalidArgumentError(f"h={h} must satisfy 1 <= h <= min(n-1, d) = {min(data.n - 1, data.d)}")
    _check_response(data.y)
    pls = fit_pls(data.U, data.y, h)
    ctx = ProjectedContext(data.U, data.y, pls.Wstar, "kpls", options.nugget)
    return ctx, _search(ctx, h, options)


def fit_kpls(data: TrainingData, h: int = 3, options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Kriging with the PLS-projected kernel: ``h`` hyperparameters instead of ``d``."""
    t0 = time.perf_counter()
    ctx, res = _kpls_stage(data, h, options)
    meta = {"h": h, "m": None, "fota_step": None, "evals": res.evals}
    model = _build("kpls", ctx, res.theta, data.bounds, data.X, data.y, meta)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def fit_kplsk(data: TrainingData, h: int = 3, options: FitOptions = FitOptions()) -> FittedSurrogate:
    """KPLS search in h dimensions, then gradient ascent over all d length-scales.

    The KPLS optimum maps to the plain kernel through
    ``eta_i = sum_l theta_l Wstar_il**2``; the second stage starts there.
    """
    t0 = time.perf_counter()
    kctx, res1 = _kpls_stage(data, h, options)
    eta = np.maximum(kctx.kernel_spec(res1.theta).effective_theta(), ETA_FLOOR)
    ctx = SqExpContext(data.U, data.y, options.nugget)
    space = SearchSpace(np.minimum(options.theta_lower, eta), np.maximum(options.theta_upper, eta))
    stage1_cll = concentrated_ll(eta, ctx)
    res2 = maximize_gradient_based(
        lambda th: feasible_ll(th, ctx), lambda th: concentrated_ll_grad(th, ctx),
        eta, space, budget=options.budget_per_dim * data.d,
    )
    theta = res2.theta if res2.objective >= feasible_ll(eta, ctx) else eta
    meta = {"h": h, "m": None, "fota_step": None, "evals": res1.evals + res2.evals,
            "eta": eta.tolist(), "stage1_cll": stage1_cll, "kpls_cll": res1.objective}
    model = _build("kplsk", ctx, theta, data.bounds, data.X, data.y, meta)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def fota_points(data: TrainingData, directions, fota_step: float):
    """Forward first-order Taylor points: one per (sample, direction) pair, sample-major."""
    X, y, dY, span = data.X, data.y, data.dY, data.bounds.span
    new_x, new_y = [], []
    for i, dirs in enumerate(directions):
        for j in dirs:
            offset = np.zeros(data.d)
            offset[j] = fota_step * span[j]
            new_x.append(X[i] + offset)
            new_y.append(fota_extrapolate(X[i], y[i], dY[i], offset))
    if not new_x:
        return np.empty((0, data.d)), np.empty(0)
    return np.array(new_x), np.array(new_y)


def fit_gek_indirect(data: TrainingData, fota_step: float = DEFAULT_FOTA_STEP,
                     options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Kriging on samples plus one forward Taylor point per sample and direction."""
    t0 = time.perf_counter()
    if data.dY is None:
        raise InvalidArgumentError("indirect GEK needs gradients")
    _cap(data.n * (data.d + 1), options)
    _check_response(data.y)
    extra_x, extra_y = fota_points(data, [range(data.d)] * data.n, fota_step)
    points = np.vstack([data.X, extra_x])
    responses = np.concatenate([data.y, extra_y])
    ctx = SqExpContext(data.bounds.to_unit(points), responses, options.nugget)
    res = _search(ctx, data.d, options)
    meta = {"h": None, "m": data.d, "fota_step": fota_step, "evals": res.evals}
    model = _build("gek_indirect", ctx, res.theta, data.bounds, points, responses, meta)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def fit_gek_direct(data: TrainingData, options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Kriging on values and gradients jointly, size n(d+1) block system."""
    t0 = time.perf_counter()
    if data.dY is None:
        raise InvalidArgumentError("direct GEK needs gradients")
    _cap(data.n * (data.d + 1), options)
    _check_response(data.y)
    ctx = DirectGekContext(data.U, data.y, data.dU, options.nugget, options.drop_mixed_diagonal)
    res = _search(ctx, data.d, options)
    meta = {"h": None, "m": None, "fota_step": None, "evals": res.evals}
    model = _build("gek_direct", ctx, res.theta, data.bounds, data.X, data.y, meta, gradients=data.dY)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def local_rotations(data: TrainingData, h: int, fota_step: float):
    """Absolute PLS rotations of every sample's Taylor point cloud, shape n x d x h.

    Samples whose cloud has no response variation (zero gradient) yield ``None``.
    """
    offsets = displacement_set(data.d).offsets
    U, dU = data.U, data.dU
    steps = fota_step * offsets
    rotations = []
    for i in range(data.n):
        cloud = np.vstack([U[i], U[i] + steps])
        # the Taylor model is linear, so it is the same in unit or physical coordinates
        values = np.concatenate([[data.y[i]], data.y[i] + steps @ dU[i]])
        try:
            rotations.append(np.abs(fit_pls(cloud, values, h).Wstar))
        except DegenerateResponseError:
            rotations.append(None)
    return rotations


def fit_gekpls(data: TrainingData, cfg: GeKplsConfig = GeKplsConfig(),
               options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Gradient-enhanced KPLS.

    For each sample, PLS runs on its Taylor point cloud; the absolute rotation
    coefficients are averaged into the kernel coefficients and the ``m``
    largest first-component coefficients pick which forward Taylor points join
    the training set (``n (m + 1)`` rows in total).
    """
    t0 = time.perf_counter()
    if data.dY is None:
        raise InvalidArgumentError("GE-KPLS needs gradients")
    if cfg.m > data.d:
        raise InvalidArgumentError(f"m={cfg.m} exceeds d={data.d}")
    if cfg.h > data.d:
        raise InvalidArgumentError(f"h={cfg.h} exceeds d={data.d}")
    _cap(data.n * (cfg.m + 1), options)
    _check_response(data.y)

    rotations = local_rotations(data, cfg.h, cfg.fota_step)
    valid = [r for r in rotations if r is not None]
    if valid:
        w_av = np.mean(valid, axis=0)
    else:
        w_av = np.full((data.d, cfg.h), 1.0 / np.sqrt(data.d))
    selected = [top_m_directions(r[:, 0] if r is not None else np.zeros(data.d), cfg.m) for r in rotations]

    extra_x, extra_y = fota_points(data, selected, cfg.fota_step)
    points = np.vstack([data.X, extra_x])
    responses = np.concatenate([data.y, extra_y])
    ctx = ProjectedContext(data.bounds.to_unit(points), responses, w_av, "gekpls", options.nugget)
    res = _search(ctx, cfg.h, options)
    meta = {"h": cfg.h, "m": cfg.m, "fota_step": cfg.fota_step, "evals": res.evals,
            "selected": [s.tolist() for s in selected], "degenerate_samples": len(rotations) - len(valid)}
    model = _build("gekpls", ctx, res.theta, data.bounds, points, responses, meta)
    model.meta["fit_seconds"] = time.perf_counter() - t0
    return model


def fit(kind: str, data: TrainingData, *, h: int | None = None, m: int | None = None,
        fota_step: float = DEFAULT_FOTA_STEP, options: FitOptions = FitOptions()) -> FittedSurrogate:
    """Dispatch by model name; ``h`` defaults to 3 for KPLS(K) and 1 for GE-KPLS."""
    if kind == "kriging":
        return fit_kriging(data, options)
    if kind == "kpls":
        return fit_kpls(data, 3 if h is None else h, options)
    if kind == "kplsk":
        return fit_kplsk(data, 3 if h is None else h, options)
    if kind == "gek_indirect":
        return fit_gek_indirect(data, fota_step, options)
    if kind == "gek_direct":
        return fit_gek_direct(data, options)
    if kind == "gekpls":
        cfg = GeKplsConfig(1 if h is None else h, 1 if m is None else m, fota_step)
        return fit_gekpls(data, cfg, options)
    raise InvalidArgumentError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


# --- persistence ---------------------------------------------------------------


def to_dict(model: FittedSurrogate) -> dict:
    spec = model.spec
    return {
        "format": FORMAT_VERSION,
        "kind": model.kind,
        "kernel": {
            "kind": spec.kind,
            "theta": spec.theta.tolist(),
            "coeffs": None if spec.coeffs is None else spec.coeffs.tolist(),
            "nugget": spec.nugget,
            "drop_mixed_diagonal": spec.drop_mixed_diagonal,
        },
        "mu": model.mu,
        "sigma2": model.sigma2,
        "bounds": {"lower": model.bounds.lower.tolist(), "upper": model.bounds.upper.tolist()},
        "points": model.points.tolist(),
        "responses": model.responses.tolist(),
        "gradients": None if model.gradients is None else model.gradients.tolist(),
        "meta": {k: v for k, v in model.meta.items()},
    }


def from_dict(doc: dict) -> FittedSurrogate:
    if doc.get("format") != FORMAT_VERSION:
        raise InvalidArgumentError(f"unsupported model format {doc.get('format')!r}")
    k = doc["kernel"]
    spec = KernelSpec(k["kind"], np.array(k["theta"]), None if k["coeffs"] is None else np.array(k["coeffs"]),
                      k["nugget"], k.get("drop_mixed_diagonal", False))
    bounds = Bounds(np.array(doc["bounds"]["lower"]), np.array(doc["bounds"]["upper"]))
    points = np.array(doc["points"], dtype=float)
    responses = np.array(doc["responses"], dtype=float)
    gradients = None if doc.get("gradients") is None else np.array(doc["gradients"], dtype=float)
    U = bounds.to_unit(points)
    if doc["kind"] == "gek_direct":
        ctx = DirectGekContext(U, responses, gradients * bounds.span, spec.nugget, spec.drop_mixed_diagonal)
    elif spec.kind == "sqexp":
        ctx = SqExpContext(U, responses, spec.nugget)
    else:
        ctx = ProjectedContext(U, responses, spec.coeffs, spec.kind, spec.nugget)
    state = ctx.evaluate(spec.theta)
    return FittedSurrogate(doc["kind"], spec, state.mu, state.sigma2, bounds, points, responses,
                           state.R.chol, state.alpha, gradients, dict(doc.get("meta", {})))


def save(model: FittedSurrogate, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(model), fh, indent=1)


def load(path) -> FittedSurrogate:
    with open(path) as fh:
        return from_dict(json.load(fh))
