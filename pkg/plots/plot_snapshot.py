#!/usr/bin/env python3
"""Step-plot solver snapshots; cells the limiter damped are shaded.

Usage:
  python plot_snapshot.py --input run_t0.000.csv [run_t0.100.csv ...] \
      --variable rho --output rho.png
  python plot_snapshot.py --input sod_t0.200.csv --primitives --output sod.png

Each input CSV is one curve (labeled by its time stamp).  ``--primitives``
renders the classic 3-panel density/velocity/pressure view for gas-dynamics
snapshots (columns rho/mom/energy).
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from common import FigureKind, FigureSpec, SchemaError, read_snapshot, save


def _time_label(path: Path) -> str:
    m = re.search(r"_t([0-9.]+)\.csv$", path.name)
    return f"t={m.group(1)}" if m else path.stem


def _shade_damped(ax, snap):
    x = snap.x
    if len(x) < 2:
        return
    dx = x[1] - x[0]
    for xi, th in zip(x, snap.theta):
        if th < 1.0:
            ax.axvspan(xi - dx / 2, xi + dx / 2, color="orange", alpha=0.18,
                       linewidth=0)


def _steps(ax, snap, column):
    ax.step(snap.x, snap.columns[column], where="mid",
            label=_time_label(snap.path))


def plot_snapshot(inputs, variable, output, primitives=False, gamma=1.4):
    spec = FigureSpec(tuple(Path(p) for p in inputs), FigureKind.SNAPSHOT,
                      Path(output))
    snaps = [read_snapshot(p) for p in spec.inputs]
    if primitives:
        needed = {"rho", "mom", "energy"}
        if not needed <= set(snaps[0].variables):
            raise SchemaError(
                f"--primitives needs gas-dynamics columns {sorted(needed)}; "
                f"file has {snaps[0].variables}")
        fig, axes = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
        for snap in snaps:
            rho = snap.columns["rho_avg"]
            mom = snap.columns["mom_avg"]
            ene = snap.columns["energy_avg"]
            vel = [m / r for m, r in zip(mom, rho)]
            prs = [(gamma - 1.0) * (e - 0.5 * m * m / r)
                   for r, m, e in zip(rho, mom, ene)]
            for ax, series, name in zip(axes, (rho, vel, prs),
                                        ("density", "velocity", "pressure")):
                ax.step(snap.x, series, where="mid", label=_time_label(snap.path))
                ax.set_ylabel(name)
        for ax in axes:
            _shade_damped(ax, snaps[-1])
            ax.legend(fontsize=8)
        axes[-1].set_xlabel("x")
    else:
        col = f"{variable}_avg"
        if col not in snaps[0].columns:
            available = ", ".join(snaps[0].variables)
            raise SchemaError(
                f"unknown variable {variable!r}; available: {available}")
        fig, ax = plt.subplots(figsize=(7, 4.2))
        for snap in snaps:
            _steps(ax, snap, col)
            _shade_damped(ax, snap)
        ax.set_xlabel("x")
        ax.set_ylabel(variable)
        ax.legend(fontsize=8)
    fig.tight_layout()
    save(fig, spec.output)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", nargs="+", required=True)
    ap.add_argument("--variable", default=None)
    ap.add_argument("--primitives", action="store_true")
    ap.add_argument("--gamma", type=float, default=1.4)
    ap.add_argument("--output", required=True)
    args = ap.parse_args(argv)
    if not args.primitives and args.variable is None:
        ap.error("--variable is required unless --primitives is given")
    try:
        plot_snapshot(args.input, args.variable, args.output,
                      primitives=args.primitives, gamma=args.gamma)
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
