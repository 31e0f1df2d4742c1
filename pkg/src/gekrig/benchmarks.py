"""Analytic and engineering test functions with gradients, plus the RE metric.

Engineering inputs follow the order in which their range tables list the
variables (left column top to bottom, then the right column), restricted to
the variables each formula uses. Engineering gradients are central finite
differences; ``y1`` and ``y2`` have analytic gradients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .doe import Bounds
from .errors import DomainError, InvalidArgumentError

Mode = Literal["as-printed", "corrected"]

FD_REL_STEP = 1e-6
GRAVITY = 386.09  # in/s^2, the vibration problem is in inch units


@dataclass(frozen=True)
class BenchmarkFunction:
    id: str
    bounds: Bounds
    names: tuple[str, ...]
    formula: Callable[[np.ndarray], float]
    analytic_grad: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def d(self) -> int:
        return self.bounds.d

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise InvalidArgumentError(f"{self.id} takes a vector of length {self.d}, got shape {x.shape}")
        if not self.bounds.contains(x, rtol=1e-9):
            raise InvalidArgumentError(f"{self.id}: point outside the input ranges")
        return x

    def eval(self, x) -> float:
        return float(self.formula(self._check(x)))

    def grad(self, x) -> np.ndarray:
        x = self._check(x)
        if self.analytic_grad is not None:
            return np.asarray(self.analytic_grad(x), dtype=float)
        return fd_gradient(self.formula, x, self.bounds.span)

    def __call__(self, X) -> np.ndarray:
        """Vectorized evaluation over the rows of ``X``."""
        X = np.atleast_2d(X)
        return np.array([self.eval(x) for x in X])

    def gradients(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.grad(x) for x in X])


def fd_gradient(func, x: np.ndarray, span: np.ndarray, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central differences with step ``rel_step * |x_j|`` (``rel_step * span_j`` when ``x_j = 0``)."""
    g = np.empty(x.size)
    for j in range(x.size):
        step = rel_step * (abs(x[j]) if x[j] != 0 else span[j])
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        g[j] = (func(xp) - func(xm)) / (xp[j] - xm[j])
    return g


def eval_y1(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x**2))


def grad_y1(x) -> np.ndarray:
    return 2.0 * np.asarray(x, dtype=float)


def eval_y2(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x[0] ** 3 + np.sum(x[1:] ** 2))


def grad_y2(x) -> np.ndarray:
    g = 2.0 * np.asarray(x, dtype=float)
    g[0] = 3.0 * x[0] ** 2
    return g


# --- engineering formulas, one argument vector each -------------------------

def _p1(x):
    b, t = x
    return 2.1952 / (t**3 * b)


def _p2(x):
    b, t = x
    return 504000.0 / (t**2 * b)


def _p3(x):
    h, _b, l, t = x
    root = np.sqrt(0.25 * (l**2 + (h + t) ** 2))
    tau1 = 6000.0 / (np.sqrt(2.0) * h * l)
    tau2 = 6000.0 * (14.0 + 0.5 * l) * root / (2.0 * (0.707 * h * l * (l**2 / 12.0 + 0.25 * (h + t) ** 2)))
    return np.sqrt((tau1**2 + tau2**2 + l * tau1 * tau2) / root)


def _p4(x):
    rw, Tu, Tl, L, r, Hu, Hl, Kw = x
    lg = np.log(r / rw)
    return 2.0 * np.pi * Tu * (Hu - Hl) / (lg * (1.0 + 2.0 * L * Tu / (lg * rw**2 * Kw) + Tu / Tl))


def _p5(x):
    L = x[:4]
    angles = np.cumsum(x[4:])
    return np.hypot(np.sum(L * np.cos(angles)), np.sum(L * np.sin(angles)))


def _p6(x):
    Sw, A, q, tc, Wdg, Wfw, sweep_deg, taper, Nz, Wp = x
    sweep = np.deg2rad(sweep_deg)
    return (
        0.036 * Sw**0.758 * Wfw**0.0035 * (A / np.cos(sweep) ** 2) * q**0.006 * taper**0.04
        * (100.0 * tc / np.cos(sweep)) ** -0.3 * (Nz * Wdg) ** 0.49
        + Sw * Wp
    )


def _p7(x):
    d1, d2, d3, D1, rho1, t2, L1, lam1, L2, lam2, L3, lam3, t1, D2, rho2 = x
    shafts = sum(lam * np.pi * L * (d / 2.0) ** 2 for lam, L, d in ((lam1, L1, d1), (lam2, L2, d2), (lam3, L3, d3)))
    discs = sum(rho * np.pi * t * (D / 2.0) ** 2 for rho, t, D in ((rho1, t1, D1), (rho2, t2, D2)))
    return shafts + discs


def _p8_factory(mode: Mode):
    power = 1 if mode == "as-printed" else 4

    def _p8(x):
        d1, G1, d2, G2, d3, G3, D1, rho1, t2, L1, L2, L3, t1, D2, rho2 = x
        K1, K2, K3 = (np.pi * G * d**power / (32.0 * L) for G, d, L in ((G1, d1, L1), (G2, d2, L2), (G3, d3, L3)))
        M1 = rho1 * np.pi * t1 * D1 / (4.0 * GRAVITY)
        M2 = rho2 * np.pi * t2 * D2 / (4.0 * GRAVITY)
        J1 = 0.5 * M1 * D1 / 2.0
        J2 = 0.5 * M2 * D2 / 2.0
        b = -((K1 + K2) / J1 + (K2 + K3) / J2)
        c = (K1 * K2 + K2 * K3 + K3 * K1) / (J1 * J2)
        disc = b**2 - 4.0 * c
        if disc < 0:
            raise DomainError(f"negative discriminant b^2 - 4c = {disc:g}")
        omega2 = (-b - np.sqrt(disc)) / 2.0
        if omega2 < 0:
            raise DomainError(f"negative squared frequency {omega2:g}")
        return np.sqrt(omega2) / (2.0 * np.pi)

    return _p8


def _ranges(*pairs):
    names = tuple(p[0] for p in pairs)
    return names, Bounds(np.array([p[1] for p in pairs]), np.array([p[2] for p in pairs]))


_WELDED = {"h": (0.125, 1.0), "b": (0.1, 1.0), "l": (5.0, 10.0), "t": (5.0, 10.0)}
_VIBRATION = {
    "d1": (1.8, 2.2), "G1": (105300000.0, 128700000.0), "d2": (1.638, 2.002), "G2": (5580000.0, 6820000.0),
    "d3": (2.025, 2.475), "G3": (3510000.0, 4290000.0), "D1": (10.8, 13.2), "rho1": (0.252, 0.308),
    "t2": (3.6, 4.4), "L1": (9.0, 11.0), "lam1": (0.252, 0.308), "L2": (10.8, 13.2), "lam2": (0.144, 0.176),
    "L3": (7.2, 8.8), "lam3": (0.09, 0.11), "t1": (2.7, 3.3), "D2": (12.6, 15.4), "rho2": (0.09, 0.11),
}


def _pick(table, names):
    return _ranges(*((n, *table[n]) for n in names))


def engineering(pid: str, mode: Mode = "as-printed") -> BenchmarkFunction:
    """Engineering problem ``p1`` .. ``p8``."""
    pid = pid.lower()
    if mode not in ("as-printed", "corrected"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if pid == "p1":
        names, bounds = _pick(_WELDED, ("b", "t"))
        return BenchmarkFunction(pid, bounds, names, _p1)
    if pid == "p2":
        names, bounds = _pick(_WELDED, ("b", "t"))
        return BenchmarkFunction(pid, bounds, names, _p2)
    if pid == "p3":
        names, bounds = _pick(_WELDED, ("h", "b", "l", "t"))
        return BenchmarkFunction(pid, bounds, names, _p3)
    if pid == "p4":
        names, bounds = _ranges(
            ("rw", 0.05, 0.15), ("Tu", 63070.0, 115600.0), ("Tl", 63.1, 116.0), ("L", 1120.0, 1680.0),
            ("r", 100.0, 50000.0), ("Hu", 990.0, 1110.0), ("Hl", 700.0, 820.0), ("Kw", 9855.0, 12045.0),
        )
        return BenchmarkFunction(pid, bounds, names, _p4)
    if pid == "p5":
        names, bounds = _ranges(*[(f"L{i}", 0.0, 1.0) for i in range(1, 5)],
                                *[(f"theta{j}", 0.0, 2.0 * np.pi) for j in range(1, 5)])
        return BenchmarkFunction(pid, bounds, names, _p5)
    if pid == "p6":
        names, bounds = _ranges(
            ("Sw", 150.0, 200.0), ("A", 6.0, 10.0), ("q", 16.0, 45.0), ("tc", 0.08, 0.18), ("Wdg", 1700.0, 2500.0),
            ("Wfw", 220.0, 300.0), ("sweep", -10.0, 10.0), ("taper", 0.5, 1.0), ("Nz", 2.5, 6.0), ("Wp", 0.025, 0.08),
        )
        return BenchmarkFunction(pid, bounds, names, _p6)
    if pid == "p7":
        names, bounds = _pick(_VIBRATION, ("d1", "d2", "d3", "D1", "rho1", "t2",
                                           "L1", "lam1", "L2", "lam2", "L3", "lam3", "t1", "D2", "rho2"))
        return BenchmarkFunction(pid, bounds, names, _p7)
    if pid == "p8":
        names, bounds = _pick(_VIBRATION, ("d1", "G1", "d2", "G2", "d3", "G3", "D1", "rho1", "t2",
                                           "L1", "L2", "L3", "t1", "D2", "rho2"))
        return BenchmarkFunction(pid, bounds, names, _p8_factory(mode))
    raise InvalidArgumentError(f"unknown engineering problem {pid!r}")


def eval_P(pid: str, x, mode: Mode = "as-printed") -> float:
    return engineering(pid, mode).eval(x)


def grad_P(pid: str, x, mode: Mode = "as-printed") -> np.ndarray:
    return engineering(pid, mode).grad(x)


def analytic(fid: str, d: int) -> BenchmarkFunction:
    if d < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    bounds = Bounds.cube(d, -10.0, 10.0)
    names = tuple(f"x{i + 1}" for i in range(d))
    if fid == "y1":
        return BenchmarkFunction(f"y1:{d}", bounds, names, eval_y1, grad_y1)
    if fid == "y2":
        if d < 2:
            raise InvalidArgumentError("y2 needs d >= 2")
        return BenchmarkFunction(f"y2:{d}", bounds, names, eval_y2, grad_y2)
    raise InvalidArgumentError(f"unknown analytic function {fid!r}")


ENGINEERING_DIMS = {"p1": 2, "p2": 2, "p3": 4, "p4": 8, "p5": 8, "p6": 10, "p7": 15, "p8": 15}


def get_function(key: str, mode: Mode = "as-printed") -> BenchmarkFunction:
    """Registry lookup: ``"y1:20"``, ``"y2:10"``, ``"p4"`` (case-insensitive)."""
    key = key.strip().lower()
    if key.startswith(("y1", "y2")):
        fid, _, dim = key.partition(":")
        if not dim:
            raise InvalidArgumentError(f"analytic functions need a dimension, e.g. '{fid}:10'")
        return analytic(fid, int(dim))
    return engineering(key, mode)


def relative_error(y_true, y_hat) -> float:
    """``||y - y_hat||_2 / ||y||_2``."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y_true.shape != y_hat.shape:
        raise InvalidArgumentError("truth and prediction lengths differ")
    norm = np.linalg.norm(y_true)
    if norm == 0:
        raise InvalidArgumentError("relative error undefined for an all-zero truth vector")
    return float(np.linalg.norm(y_true - y_hat) / norm)
