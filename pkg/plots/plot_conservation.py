#!/usr/bin/env python3
"""Plot total-mass traces (drift from the initial value) from a run's
diagnostics JSON.

Usage:
  python plot_conservation.py --input run_diagnostics.json --output mass.png
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from common import FigureKind, FigureSpec, SchemaError, read_diagnostics, save


def plot_conservation(input_path, output):
    spec = FigureSpec((Path(input_path),), FigureKind.CONSERVATION, Path(output))
    diag = read_diagnostics(spec.inputs[0])
    times = diag["steps"]["time"]
    mass = diag["steps"]["mass"]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for name, series in mass.items():
        if not series:
            continue
        drift = [m - series[0] for m in series]
        ax.plot(times, drift, label=f"{name} (total {series[0]:.6g})")
    ax.set_xlabel("t")
    ax.set_ylabel("total mass drift")
    ax.axhline(0.0, color="k", linewidth=0.6)
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
        plot_conservation(args.input, args.output)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
