"""Run one study preset and write records, summary and a trade-off plot.

    python3 scripts/run_study.py study3 --desk-scale --out results/
"""
import argparse
import sys
import time
from pathlib import Path

from gekrig import harness


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("preset", help=f"one of {', '.join(harness.PRESETS)} or a grid JSON path")
    parser.add_argument("--desk-scale", action="store_true")
    parser.add_argument("--trials", type=int, help="override the trial count of every cell")
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    configs = harness.load_configs(args.preset, args.desk_scale)
    if args.trials:
        from dataclasses import replace
        configs = [replace(c, trials=args.trials) for c in configs]
    out = Path(args.out) / Path(args.preset).stem
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    records = []
    for i, cfg in enumerate(configs, 1):
        recs = harness.run_experiment(cfg)
        records.extend(recs)
        row = harness.summarize(recs)[0]
        print(f"[{i}/{len(configs)}] {cfg.function_key} {harness.series_label(row):>10} n={row.n:<4} "
              f"RE={row.mean_re:.4g} t={row.mean_fit_seconds:.3g}s failed={row.failed}", flush=True)
    summary = harness.summarize(records)
    (out / "records.csv").write_text(harness.records_to_csv(records))
    (out / "summary.csv").write_text(harness.summary_to_csv(summary))
    for key in dict.fromkeys((r.function, r.d) for r in summary):
        rows = [r for r in summary if (r.function, r.d) == key]
        harness.emit_plot(rows, out / f"{key[0]}_d{key[1]}.svg")
    print(f"done in {time.perf_counter() - t0:.0f} s -> {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
