#!/usr/bin/env python3
"""Run the three positivity stress problems (Burgers half-sine, dry dam
break, double rarefaction) with limiting on, plus the unlimited controls,
and render the standard figures.

Outputs land in --outdir (default ./positivity_suite).
"""

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
PRESETS = ROOT / "presets"
PLOTS = ROOT / "plots"


def run_cli(args, outdir):
    env = dict(os.environ, POSFLOW_OUTPUT_DIR=str(outdir))
    subprocess.run([sys.executable, "-m", "posflow.cli", *args], check=False,
                   env=env)


def plot(script, args):
    subprocess.run([sys.executable, str(PLOTS / script), *args], check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="positivity_suite")
    args = ap.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for preset in ("burgers_positive", "dam_break_dry",
                   "euler_double_rarefaction"):
        cfg = json.loads((PRESETS / f"{preset}.json").read_text())
        run_cli(["run", "--config", str(PRESETS / f"{preset}.json")], outdir)
        # unlimited control (stops at the first positivity violation)
        cfg["limiter"]["mode"] = "off"
        cfg["output"]["prefix"] = cfg["output"]["prefix"] + "_unlimited"
        ctrl = outdir / f"{preset}_unlimited.json"
        ctrl.write_text(json.dumps(cfg))
        run_cli(["run", "--config", str(ctrl)], outdir)

    for prefix, var in (("burgers", "u"), ("dam_break", "h")):
        snaps = sorted(str(p) for p in outdir.glob(f"{prefix}_t*.csv"))
        plot("plot_snapshot.py", ["--input", *snaps, "--variable", var,
                                  "--output", str(outdir / f"{prefix}.png")])
        plot("plot_minima.py",
             ["--input", str(outdir / f"{prefix}_diagnostics.json"),
              "--output", str(outdir / f"{prefix}_minima.png")])
    last = sorted(outdir.glob("double_rarefaction_t*.csv"))[-1]
    plot("plot_snapshot.py", ["--input", str(last), "--primitives",
                              "--output", str(outdir / "double_rarefaction.png")])
    plot("plot_conservation.py",
         ["--input", str(outdir / "burgers_diagnostics.json"),
          "--output", str(outdir / "burgers_mass.png")])
    print(f"suite written to {outdir}/")


if __name__ == "__main__":
    main()
