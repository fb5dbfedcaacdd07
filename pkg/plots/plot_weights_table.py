#!/usr/bin/env python3
"""Render the interior-weight table CSV (from `posflow weights --format csv`)
as a figure: one line per cell kind, exact values as markers, brackets as
vertical bars.

Usage:
  posflow weights --format csv > weights.csv
  python plot_weights_table.py --input weights.csv --output weights.png
"""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction
from pathlib import Path

import matplotlib.pyplot as plt

from common import FigureKind, FigureSpec, SchemaError, save


def read_weight_table(path):
    with open(path) as fh:
        reader = csv.DictReader(fh)
        required = {"cell", "k", "lower", "upper"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(f"{path}: missing column(s) {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: empty weight table")
    return rows


def plot_weights_table(input_path, output):
    spec = FigureSpec((Path(input_path),), FigureKind.WEIGHTS_TABLE,
                      Path(output))
    rows = read_weight_table(spec.inputs[0])
    by_cell = {}
    for r in rows:
        by_cell.setdefault(r["cell"], []).append(
            (int(r["k"]), float(Fraction(r["lower"])),
             float(Fraction(r["upper"]))))
    fig, ax = plt.subplots(figsize=(7.5, 5))
    for cell, entries in sorted(by_cell.items()):
        entries.sort()
        ks = [e[0] for e in entries]
        lo = [e[1] for e in entries]
        hi = [e[2] for e in entries]
        line, = ax.plot(ks, hi, "-o", markersize=3.5, label=cell)
        for k, a, b in entries:
            if a != b:
                ax.vlines(k, a, b, color=line.get_color(), alpha=0.5)
    ax.set_xlabel("polynomial degree k")
    ax.set_ylabel("interior weight (upper bound; bars = bracket)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    save(fig, spec.output)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", required=True)
    ap.add_argument("--output", required=True)
    args = ap.parse_args(argv)
    try:
        plot_weights_table(args.input, args.output)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
