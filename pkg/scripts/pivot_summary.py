"""Print a summary CSV as two tables (mean RE, mean fit seconds): one row per
model, one column per training size, grouped by function and dimension."""
import sys
from pathlib import Path

from gekrig.harness import series_label, summary_from_csv


def main(path: str) -> int:
    rows = summary_from_csv(Path(path).read_text())
    for key in dict.fromkeys((r.function, r.d) for r in rows):
        group = [r for r in rows if (r.function, r.d) == key]
        labels = list(dict.fromkeys(series_label(r) for r in group))
        for field, fmt in (("mean_re", "{:.4f}"), ("mean_fit_seconds", "{:.3g}")):
            print(f"\n{key[0]} d={key[1]}  {field}")
            for label in labels:
                cells = [f"n={r.n}: " + fmt.format(getattr(r, field)) for r in group if series_label(r) == label]
                print(f"  {label:<11} " + "   ".join(cells))
    return 0


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit("usage: pivot_summary.py summary.csv")
    sys.exit(main(sys.argv[1]))
