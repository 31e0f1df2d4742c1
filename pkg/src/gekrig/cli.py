"""``gekrig`` command line: fit, predict, bench, sweep-step, plot."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, models
from .benchmarks import get_function
from .doe import lhs
from .errors import GekrigError, InvalidArgumentError


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _read_points(path: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]  # header line
    try:
        return np.array(rows, dtype=float)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc


def cmd_fit(args) -> int:
    func = get_function(args.function, args.mode)
    X = lhs(args.n, func.bounds, "maximin", args.seed).points
    needs_grad = args.model in models.GRADIENT_MODELS
    data = models.TrainingData(X, func(X), func.bounds, func.gradients(X) if needs_grad else None)
    model = models.fit(args.model, data, h=args.h, m=args.m, fota_step=args.step,
                       options=models.FitOptions(seed=args.seed))
    model.meta["function"] = func.id
    models.save(model, args.out)
    print(f"{args.model} on {func.id}: {model.points.shape[0]} rows, nugget {model.nugget:g}, "
          f"{model.meta['fit_seconds']:.3f} s -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = models.load(args.model)
    X = _read_points(args.points)
    yhat = np.atleast_1d(model.predict(X))
    lines = ["prediction"] + [repr(float(v)) for v in yhat]
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _apply_overrides(configs, args):
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.n_v is not None:
        changes["n_v"] = args.n_v
    if args.step is not None:
        changes["fota_step"] = args.step
    return [replace(c, **changes) for c in configs] if changes else configs


def cmd_bench(args) -> int:
    configs = _apply_overrides(harness.load_configs(args.source, args.desk_scale), args)
    print(f"{len(configs)} configurations, {sum(c.trials for c in configs)} trials", file=sys.stderr)
    records = harness.run_batch(configs)
    summary = harness.summarize(records)
    _write(args.records, harness.records_to_csv(records))
    _write(args.summary, harness.summary_to_csv(summary))
    if args.plot:
        harness.emit_plot(summary, args.plot)
    failed = sum(r.failed for r in records)
    if failed:
        print(f"{failed} of {len(records)} trials failed", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = harness.ExperimentConfig(args.function, args.d, args.model, args.n, args.h, args.m,
                                   trials=args.trials, n_v=args.n_v, base_seed=args.seed, mode=args.mode)
    steps = tuple(args.steps) if args.steps else harness.SWEEP_STEPS
    best, rows, seconds = harness.sweep_step(cfg, steps)
    lines = ["fota_step,mean_re,mean_fit_seconds,failed"]
    lines += [f"{s!r},{row.mean_re!r},{row.mean_fit_seconds!r},{row.failed}" for s, row in rows]
    _write(args.out, "\n".join(lines) + "\n")
    print(f"best step {best:g}; sweep took {seconds:.1f} s (excluded from fit times)", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    summary = harness.summary_from_csv(Path(args.summary).read_text())
    harness.emit_plot(summary, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gekrig", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model on a maximin plan and write it as JSON")
    p.add_argument("function", help='function id, e.g. "y1:10" or "p4"')
    p.add_argument("model", choices=models.MODEL_KINDS)
    p.add_argument("n", type=int, help="number of training samples")
    p.add_argument("--h", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--step", type=float, default=models.DEFAULT_FOTA_STEP)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("as-printed", "corrected"), default="as-printed")
    p.add_argument("-o", "--out", default="model.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a saved model on the rows of a CSV file")
    p.add_argument("model")
    p.add_argument("points")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="run a preset or grid JSON")
    p.add_argument("source", help=f"one of {', '.join(harness.PRESETS)} or a grid JSON path")
    p.add_argument("--desk-scale", action="store_true", help="cap d <= 20 and n <= 200")
    p.add_argument("--trials", type=int)
    p.add_argument("--n-v", type=int)
    p.add_argument("--step", type=float, help="FOTA step for every gradient model")
    p.add_argument("--records", default="records.csv")
    p.add_argument("--summary", default="summary.csv")
    p.add_argument("--plot", help="also write an SVG trade-off plot")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep-step", help="mean RE over a log grid of FOTA steps")
    p.add_argument("function", help='"y1", "y2" or "p1".."p8"')
    p.add_argument("d", type=int)
    p.add_argument("model", choices=sorted(models.GRADIENT_MODELS))
    p.add_argument("n", type=int, help="value-only sample count (the model trains on n/2)")
    p.add_argument("--h", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--n-v", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("as-printed", "corrected"), default="as-printed")
    p.add_argument("--steps", type=float, nargs="+")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="summary CSV to SVG")
    p.add_argument("summary")
    p.add_argument("out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except GekrigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
