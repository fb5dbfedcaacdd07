#!/usr/bin/env python3
"""Log-log convergence plot from the order-table CSV, with k+1 reference
slopes; limiter-on and limiter-off series overlay when both are present.

Usage:
  python plot_convergence.py --input orders.csv --output convergence.png
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from common import FigureKind, FigureSpec, SchemaError, read_order_table, save


def plot_convergence(input_path, output, norm="l2_error"):
    spec = FigureSpec((Path(input_path),), FigureKind.CONVERGENCE, Path(output))
    rows = read_order_table(spec.inputs[0])
    series = {}
    for r in rows:
        key = (int(r["degree"]), r["limiter"])
        series.setdefault(key, []).append((float(r["dx"]), float(r[norm])))
    if all(len(pts) < 2 for pts in series.values()):
        raise SchemaError("need at least two grids per degree to plot orders")
    fig, ax = plt.subplots(figsize=(6.5, 5))
    styles = {"both": "-o", "off": "--s", "pointwise": "-^", "retentional": "-v"}
    for (k, limiter), pts in sorted(series.items()):
        pts.sort()
        dx = [p[0] for p in pts]
        err = [p[1] for p in pts]
        ax.loglog(dx, err, styles.get(limiter, "-o"),
                  label=f"k={k}, limiter {limiter}")
        # reference slope k+1 anchored at the finest point
        ref = [err[0] * (d / dx[0]) ** (k + 1) for d in dx]
        ax.loglog(dx, ref, ":", color="gray", linewidth=0.9)
    ax.set_xlabel("dx")
    ax.set_ylabel(norm.replace("_", " "))
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    save(fig, spec.output)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True)
    ap.add_argument("--output", required=True)
    ap.add_argument("--norm", default="l2_error",
                    choices=("l1_error", "l2_error", "linf_error"))
    args = ap.parse_args(argv)
    try:
        plot_convergence(args.input, args.output, args.norm)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
