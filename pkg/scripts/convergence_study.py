#!/usr/bin/env python3
"""Produce the smooth-advection order table (limiter on and off) and the
log-log convergence figure.
"""

import argparse
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degrees", default="1,2,3")
    ap.add_argument("--grids", default="20,40,80,160")
    ap.add_argument("--outdir", default="convergence_study")
    args = ap.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table = outdir / "orders.csv"
    subprocess.run([sys.executable, "-m", "posflow.cli", "convergence",
                    "--problem", "advection", "--degrees", args.degrees,
                    "--grids", args.grids, "--output", str(table)], check=True)
    subprocess.run([sys.executable, str(ROOT / "plots" / "plot_convergence.py"),
                    "--input", str(table),
                    "--output", str(outdir / "orders.png")], check=True)
    print(f"study written to {outdir}/")


if __name__ == "__main__":
    main()
