"""Batch experiments: sampling, fitting, scoring, CSV records and SVG trade-off plots.

A config names one (function, d, model, n) cell. ``n`` is the sample count of
the value-only models; gradient-using models train on ``n / 2`` points. Each
trial draws a fresh maximin plan (seed ``base_seed + trial``) and a fresh
random validation plan, fits, and records the relative error and the fit
wall time.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .benchmarks import ENGINEERING_DIMS, get_function, relative_error
from .doe import lhs
from .errors import GekrigError, InvalidArgumentError
from .models import DEFAULT_FOTA_STEP, GRADIENT_MODELS, MODEL_KINDS, FitOptions, TrainingData, fit

log = logging.getLogger(__name__)

CSV_FIELDS = ("function", "d", "model", "h", "m", "n", "trial", "seed", "re", "fit_seconds", "nugget")
SUMMARY_FIELDS = ("function", "d", "model", "h", "m", "n", "trials", "failed", "mean_re", "mean_fit_seconds")
VALIDATION_SEED_OFFSET = 1_000_003
SWEEP_STEPS = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
DESK_MAX_D = 20
DESK_MAX_N = 200
PRESETS = ("study1", "study2", "study3")


@dataclass(frozen=True)
class ExperimentConfig:
    function: str                    # "y1", "y2" or "p1".."p8"
    d: int
    model: str
    n: int                           # value-only sample count; gradient models use n // 2
    h: int | None = None
    m: int | None = None
    fota_step: float = DEFAULT_FOTA_STEP
    trials: int = 10
    n_v: int = 5000
    base_seed: int = 0
    mode: str = "as-printed"
    options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        fn = self.function.lower()
        object.__setattr__(self, "function", fn)
        if self.model not in MODEL_KINDS:
            raise InvalidArgumentError(f"unknown model {self.model!r}")
        if fn in ENGINEERING_DIMS and self.d != ENGINEERING_DIMS[fn]:
            raise InvalidArgumentError(f"{fn} has d={ENGINEERING_DIMS[fn]}, got {self.d}")
        if self.trials < 1 or self.n_v < 1:
            raise InvalidArgumentError("trials and n_v must be >= 1")
        if self.model in GRADIENT_MODELS and self.n % 2:
            raise InvalidArgumentError(f"gradient model {self.model} needs an even n, got {self.n}")
        if self.train_n < 2:
            raise InvalidArgumentError("too few training samples")

    @property
    def function_key(self) -> str:
        return self.function if self.function in ENGINEERING_DIMS else f"{self.function}:{self.d}"

    @property
    def uses_gradients(self) -> bool:
        return self.model in GRADIENT_MODELS

    @property
    def train_n(self) -> int:
        return self.n // 2 if self.uses_gradients else self.n

    @property
    def key(self) -> tuple:
        return (self.function, self.d, self.model, self.h, self.m, self.train_n)


@dataclass(frozen=True)
class ExperimentRecord:
    function: str
    d: int
    model: str
    h: int | None
    m: int | None
    n: int                 # samples the model actually trained on
    trial: int
    seed: int
    re: float              # NaN when the fit failed
    fit_seconds: float
    nugget: float
    error: str | None = field(default=None, compare=False)

    @property
    def failed(self) -> bool:
        return math.isnan(self.re)

    @property
    def key(self) -> tuple:
        return (self.function, self.d, self.model, self.h, self.m, self.n)


# --- running -------------------------------------------------------------------


def pool_size(tasks: int) -> int:
    cap = os.environ.get("GEKRIG_THREADS")
    workers = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(workers, tasks))


def _validation_points(func, n_v: int, seed: int) -> np.ndarray:
    if n_v == 1:
        return func.bounds.from_unit(np.random.default_rng(seed).random((1, func.d)))
    return lhs(n_v, func.bounds, "random", seed).points


def run_trial(cfg: ExperimentConfig, trial: int) -> ExperimentRecord:
    func = get_function(cfg.function_key, cfg.mode)
    seed = cfg.base_seed + trial
    echo = dict(function=cfg.function, d=cfg.d, model=cfg.model, h=cfg.h, m=cfg.m,
                n=cfg.train_n, trial=trial, seed=seed)
    try:
        X = lhs(cfg.train_n, func.bounds, "maximin", seed).points
        data = TrainingData(X, func(X), func.bounds, func.gradients(X) if cfg.uses_gradients else None)
        options = replace(cfg.options, seed=seed)
        t0 = time.perf_counter()
        model = fit(cfg.model, data, h=cfg.h, m=cfg.m, fota_step=cfg.fota_step, options=options)
        seconds = time.perf_counter() - t0
        V = _validation_points(func, cfg.n_v, seed + VALIDATION_SEED_OFFSET)
        re = relative_error(func(V), model.predict(V))
    except (GekrigError, np.linalg.LinAlgError, MemoryError) as exc:
        log.warning("trial %d of %s failed: %s", trial, cfg.key, exc)
        return ExperimentRecord(**echo, re=math.nan, fit_seconds=math.nan, nugget=math.nan,
                                error=f"{type(exc).__name__}: {exc}")
    return ExperimentRecord(**echo, re=re, fit_seconds=seconds, nugget=model.nugget)


def run_batch(configs, workers: int | None = None) -> list[ExperimentRecord]:
    """All trials of all configs through one pool; output ordered by (config, trial)."""
    tasks = [(i, cfg, t) for i, cfg in enumerate(configs) for t in range(cfg.trials)]
    workers = pool_size(len(tasks)) if workers is None else workers
    if workers == 1:
        results = [run_trial(cfg, t) for _, cfg, t in tasks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda task: run_trial(task[1], task[2]), tasks))
    order = sorted(range(len(tasks)), key=lambda k: (tasks[k][0], tasks[k][2]))
    return [results[k] for k in order]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> list[ExperimentRecord]:
    return run_batch([cfg], workers)


@dataclass(frozen=True)
class SummaryRow:
    function: str
    d: int
    model: str
    h: int | None
    m: int | None
    n: int
    trials: int
    failed: int
    mean_re: float
    mean_fit_seconds: float


def summarize(records) -> list[SummaryRow]:
    """Per-cell means over successful trials; cells keep first-appearance order."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault(rec.key, []).append(rec)
    rows = []
    for key, recs in groups.items():
        ok = [r for r in recs if not r.failed]
        if ok:
            mean_re = float(np.mean([r.re for r in ok]))
            mean_s = float(np.mean([r.fit_seconds for r in ok]))
        else:
            mean_re = mean_s = math.nan
        rows.append(SummaryRow(*key, trials=len(recs), failed=len(recs) - len(ok),
                               mean_re=mean_re, mean_fit_seconds=mean_s))
    if records and all(r.failed for r in records):
        warnings.warn("every trial failed; the summary holds no results", RuntimeWarning, stacklevel=2)
    return rows


def sweep_step(cfg: ExperimentConfig, steps=SWEEP_STEPS, workers: int | None = None):
    """Mean RE per FOTA step; returns ``(best_step, summary_rows, sweep_seconds)``.

    Sweep time is reported separately from the fit times it selects between.
    """
    if not cfg.uses_gradients:
        raise InvalidArgumentError("the step sweep applies to gradient-enhanced models")
    t0 = time.perf_counter()
    configs = [replace(cfg, fota_step=s) for s in steps]
    records = run_batch(configs, workers)
    k = cfg.trials
    rows = [(s, summarize(records[i * k:(i + 1) * k])[0]) for i, s in enumerate(steps)]
    scored = [(row.mean_re, s) for s, row in rows if not math.isnan(row.mean_re)]
    if not scored:
        raise InvalidArgumentError("every step in the sweep failed")
    best = min(scored)[1]
    return best, rows, time.perf_counter() - t0


# --- CSV -------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _opt_int(text: str) -> int | None:
    return None if text == "" else int(text)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[ExperimentRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise InvalidArgumentError(f"unexpected CSV header {reader.fieldnames}")
    return [
        ExperimentRecord(row["function"], int(row["d"]), row["model"], _opt_int(row["h"]), _opt_int(row["m"]),
                         int(row["n"]), int(row["trial"]), int(row["seed"]), float(row["re"]),
                         float(row["fit_seconds"]), float(row["nugget"]))
        for row in reader
    ]


def summary_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, f)) for f in SUMMARY_FIELDS])
    return buf.getvalue()


def summary_from_csv(text: str) -> list[SummaryRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SUMMARY_FIELDS:
        raise InvalidArgumentError(f"unexpected summary header {reader.fieldnames}")
    return [
        SummaryRow(row["function"], int(row["d"]), row["model"], _opt_int(row["h"]), _opt_int(row["m"]),
                   int(row["n"]), int(row["trials"]), int(row["failed"]), float(row["mean_re"]),
                   float(row["mean_fit_seconds"]))
        for row in reader
    ]


# --- presets ---------------------------------------------------------------------


def configs_from_dict(doc: dict, desk_scale: bool = False) -> list[ExperimentConfig]:
    """Expand a grid document into configs.

    ``{"trials": 10, "grid": [{"function": "y1", "d": [10], "n": [20, 100],
    "models": [{"model": "gekpls", "m": 2}]}]}``. ``n`` may be replaced by
    ``n_per_d`` (multiples of d); ``"m": "d"`` means one point per input.
    Under ``desk_scale`` an optional ``"desk"`` block overrides top-level
    keys and every cell's ``n`` list.
    """
    if desk_scale and "desk" in doc:
        desk = doc["desk"]
        grid = [{**cell, "n": desk["n"]} if "n" in desk else cell for cell in doc["grid"]]
        doc = {**doc, **{k: v for k, v in desk.items() if k != "n"}, "grid": grid}
    common = {k: doc[k] for k in ("trials", "n_v", "base_seed", "fota_step", "mode") if k in doc}
    configs, seen = [], set()
    for cell in doc["grid"]:
        fn = cell["function"]
        dims = cell.get("d", [ENGINEERING_DIMS.get(fn)])
        for d in dims:
            if desk_scale and d > DESK_MAX_D:
                continue
            sizes = cell["n"] if "n" in cell else [k * d for k in cell["n_per_d"]]
            for n in sizes:
                n = min(n, DESK_MAX_N) if desk_scale else n
                for spec in cell["models"]:
                    m = d if spec.get("m") == "d" else spec.get("m")
                    extra = {k: spec[k] for k in ("fota_step",) if k in spec}
                    cfg = ExperimentConfig(fn, d, spec["model"], n, spec.get("h"), m, **{**common, **extra})
                    if cfg not in seen:
                        seen.add(cfg)
                        configs.append(cfg)
    return configs


def load_preset(name: str, desk_scale: bool = False) -> list[ExperimentConfig]:
    if name not in PRESETS:
        raise InvalidArgumentError(f"unknown preset {name!r}; expected one of {PRESETS}")
    text = resources.files("gekrig.presets").joinpath(f"{name}.json").read_text()
    return configs_from_dict(json.loads(text), desk_scale)


def load_configs(source: str, desk_scale: bool = False) -> list[ExperimentConfig]:
    """A preset name or a path to a grid JSON document."""
    if source in PRESETS:
        return load_preset(source, desk_scale)
    return configs_from_dict(json.loads(Path(source).read_text()), desk_scale)


# --- SVG -------------------------------------------------------------------------

_W, _H = 640, 480
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 170, 20, 50
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")


def series_label(row: SummaryRow) -> str:
    if row.model == "gekpls":
        return f"GE-KPLS{row.m}"
    return {"kriging": "kriging", "kpls": "KPLS", "kplsk": "KPLSK", "gek_indirect": "GEK",
            "gek_direct": "GEK-direct"}[row.model]


def _decades(lo: float, hi: float) -> tuple[int, int]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return a, b if b > a else a + 1


def emit_plot(summary, path) -> str:
    """Log-log plot of mean fit time (y) against mean RE (x), one polyline per model.

    Output depends only on the input rows, so it is byte-stable.
    """
    series: dict[str, list[tuple[float, float]]] = {}
    for row in summary:
        if math.isnan(row.mean_re) or row.mean_re <= 0 or not row.mean_fit_seconds > 0:
            continue
        series.setdefault(series_label(row), []).append((row.mean_re, row.mean_fit_seconds))
    xs = [p[0] for pts in series.values() for p in pts] or [1e-3, 1e-1]
    ys = [p[1] for pts in series.values() for p in pts] or [1e-2, 1e0]
    x0, x1 = _decades(min(xs), max(xs))
    y0, y1 = _decades(min(ys), max(ys))
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x):
        return _LEFT + (math.log10(x) - x0) / (x1 - x0) * pw

    def py(y):
        return _TOP + ph - (math.log10(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
           f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(x0, x1 + 1):
        x = px(10.0**k)
        out.append(f'<line x1="{x:.2f}" y1="{_TOP + ph}" x2="{x:.2f}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{_TOP + ph + 18}" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        y = py(10.0**k)
        out.append(f'<line x1="{_LEFT - 5}" y1="{y:.2f}" x2="{_LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.2f}" y="{_H - 12}" text-anchor="middle">mean relative error</text>')
    out.append(f'<text x="16" y="{_TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_TOP + ph / 2:.2f})">mean fit time (s)</text>')
    for i, (label, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = _TOP + 12 + 16 * i
        out.append(f'<line x1="{_W - _RIGHT + 15}" y1="{ly - 4}" x2="{_W - _RIGHT + 35}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_W - _RIGHT + 40}" y="{ly}">{label}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    Path(path).write_text(text)
    return text

