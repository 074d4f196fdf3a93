#!/usr/bin/env python3
"""
Render curve CSVs as SVG line charts (needs matplotlib).

Accepts adaptation curves (curve.csv, curves/*.csv from run-benchmark) and
sweep arm files (sweep_*.csv, drawn with a mean ± std band).

Usage:
    python scripts/plot_curves.py runs/synthetic-benchmark/curves/*.csv -o macro_f1.svg
    python scripts/plot_curves.py runs/lambda-sweep/sweep_*.csv -o sweep.svg
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_columns(path: Path) -> dict[str, list[float]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return {}
    return {key: [float(r[key]) if r[key] else float("nan") for r in rows] for key in rows[0]}


def plot(paths: list[Path], output: Path, column: str, title: str | None) -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    for path in paths:
        cols = read_columns(path)
        if not cols:
            continue
        if "mean_macro_f1" in cols:
            mean, std = cols["mean_macro_f1"], cols["std_macro_f1"]
            line, = ax.plot(cols["epoch"], mean, label=path.stem)
            ax.fill_between(
                cols["epoch"],
                [m - s for m, s in zip(mean, std)],
                [m + s for m, s in zip(mean, std)],
                color=line.get_color(),
                alpha=0.2,
            )
        elif column in cols:
            ax.plot(cols["epoch"], cols[column], label=path.stem)
        else:
            print(f"Skipping {path}: no '{column}' column", file=sys.stderr)

    ax.set_xlabel("epoch")
    ax.set_ylabel(column.replace("_", " "))
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, format="svg")
    plt.close(fig)


def main() -> int:
    parser = argparse.ArgumentParser(description="Plot adaptation or sweep curves as SVG")
    parser.add_argument("curves", nargs="+", help="Curve CSV files")
    parser.add_argument("-o", "--output", required=True, help="SVG file to write")
    parser.add_argument("--column", default="macro_f1", help="Column of adaptation curves (default: macro_f1)")
    parser.add_argument("--title", help="Chart title")
    args = parser.parse_args()

    plot([Path(p) for p in args.curves], Path(args.output), args.column, args.title)
    print(f"Wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
