#!/usr/bin/env python3
"""Plot the per-step minima of the positivity functionals (depth, density,
pressure, ...) from a run's diagnostics JSON, on a symlog axis so a dip
below zero is visible.

Usage:
  python plot_minima.py --input run_diagnostics.json --output minima.png
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from common import FigureKind, FigureSpec, SchemaError, read_diagnostics, save


def plot_minima(input_path, output):
    spec = FigureSpec((Path(input_path),), FigureKind.MINIMA, Path(output))
    diag = read_diagnostics(spec.inputs[0])
    times = diag["steps"]["time"]
    minima = diag["steps"]["min_averages"]
    if not minima:
        raise SchemaError(f"{spec.inputs[0]}: diagnostics carry no minima")
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for name, series in minima.items():
        ax.plot(times, series, label=f"min {name}")
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.axhline(0.0, color="k", linewidth=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("min cell-average value")
    ax.legend(fontsize=8)
    ax.set_title(f"status: {diag['status']}")
    fig.tight_layout()
    save(fig, spec.output)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True)
    ap.add_argument("--output", required=True)
    args = ap.parse_args(argv)
    try:
        plot_minima(args.input, args.output)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
