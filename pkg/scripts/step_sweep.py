"""FOTA step sweep for GE-KPLS on y1 (d=10, 50 gradient samples, m=2).

Uses seeds disjoint from the default acceptance seeds so the chosen step is
not tuned on the trials it is judged by.
"""
import sys

from gekrig import harness


def main() -> int:
    cfg = harness.ExperimentConfig("y1", 10, "gekpls", 100, h=1, m=2, trials=5, n_v=2000, base_seed=500)
    best, rows, seconds = harness.sweep_step(cfg)
    for step, row in rows:
        print(f"step {step:<8g} mean RE {row.mean_re:.5f}  mean fit {row.mean_fit_seconds:.3f} s  failed {row.failed}")
    print(f"best step {best:g} (sweep {seconds:.1f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
