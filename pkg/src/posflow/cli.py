"""Command-line surface: run | weights | convergence | verify.

Exit codes: 0 success, 1 runtime invariant failure, 2 usage/config error.
POSFLOW_OUTPUT_DIR overrides the output root.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import (ConfigError, load_config, model_from_config,
                     solver_options_from_config, build_field, variable_names)
from .convergence import convergence_study, rows_to_csv
from .polyspace import SpaceKind
from .solver import PositivityError, TimeStepCollapse, run
from .verify import run_verification
from .weights import SUPPORTED_CELLS, weight_table


def _output_dir(cfg_dir: str | None, fallback: str = ".") -> Path:
    env = os.environ.get("POSFLOW_OUTPUT_DIR")
    base = Path(env) if env else Path(cfg_dir) if cfg_dir else Path(fallback)
    base.mkdir(parents=True, exist_ok=True)
    return base


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def _write_snapshots(result, cfg, model, out_dir: Path, prefix: str) -> list[str]:
    names = variable_names(model)
    files = []
    centers = result.field.mesh.centers()
    header = ",".join(
        ["x_center"] + [f"{n}_avg" for n in names] + [f"{n}_min" for n in names]
        + ["theta"])
    for t, avgs, minima, theta in result.snapshots:
        path = out_dir / f"{prefix}_t{t:.3f}.csv"
        rows = [header]
        for i in range(len(centers)):
            cells = [f"{centers[i]:.10e}"]
            cells += [f"{avgs[i, v]:.10e}" for v in range(len(names))]
            cells += [f"{minima[i, v]:.10e}" for v in range(len(names))]
            cells.append(f"{theta[i]:.10e}")
            rows.append(",".join(cells))
        path.write_text("\n".join(rows) + "\n")
        files.append(str(path))
    return files


def _diagnostics_payload(result, cfg, model):
    steps = result.steps
    names = variable_names(model)
    mass = np.array([s.mass for s in steps]) if steps else np.zeros((0, len(names)))
    payload = {
        "config": cfg,
        "status": result.status,
        "n_steps": len(steps),
        "steps": {
            "time": [s.time for s in steps],
            "dt": [s.dt for s in steps],
            "dt_stable": [s.dt_stable for s in steps],
            "dt_zero": [s.dt_zero for s in steps],
            "dt_pos": [s.dt_pos for s in steps],
            "theta_min": [s.theta_min for s in steps],
            "triggered": [s.triggered for s in steps],
            "quick_hit_rate": [s.quick_hit_rate for s in steps],
            "retries": [s.retries for s in steps],
            "mass": {n: mass[:, v].tolist() for v, n in enumerate(names)},
            "min_averages": {
                key: [s.min_averages[key] for s in steps]
                for key in (steps[0].min_averages if steps else {})
            },
        },
    }
    if steps:
        payload["summary"] = {
            "averages_untouched": all(s.averages_untouched for s in steps),
            "dt_within_stable": all(
                s.dt <= s.dt_stable * (1 + 1e-12) for s in steps),
            "dt_within_outflow_cap": all(
                s.dt <= cfg["time"]["alpha_z"] * s.dt_zero * (1 + 1e-12)
                for s in steps),
            "mass_drift": (mass[-1] - mass[0]).tolist(),
            "theta_min": min(s.theta_min for s in steps),
        }
        for key in steps[0].min_averages:
            payload[f"min_{key}"] = min(s.min_averages[key] for s in steps)
    return _json_safe(payload)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.threads is not None:
        cfg["threads"] = args.threads
    model = model_from_config(cfg)
    opts = solver_options_from_config(cfg)
    try:
        field = build_field(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    t = cfg["time"]
    try:
        result = run(field, opts, t["t_final"],
                     snapshot_interval=t["snapshot_interval"],
                     max_steps=t["max_steps"])
    except (PositivityError, TimeStepCollapse) as e:
        print(f"runtime invariant failure: {e}", file=sys.stderr)
        return 1
    out_dir = _output_dir(cfg["output"]["dir"])
    prefix = cfg["output"]["prefix"] or cfg["problem"]["name"]
    files = _write_snapshots(result, cfg, model, out_dir, prefix)
    diag_path = out_dir / f"{prefix}_diagnostics.json"
    diag_path.write_text(
        json.dumps(_diagnostics_payload(result, cfg, model), indent=1,
                   sort_keys=True) + "\n")
    print(f"wrote {len(files)} snapshot(s) and {diag_path}")
    return 0


def cmd_weights(args) -> int:
    cells = SUPPORTED_CELLS if args.cell == "all" else (args.cell,)
    for c in cells:
        if c not in SUPPORTED_CELLS:
            print(f"unknown cell kind {c!r}; choose from "
                  f"{', '.join(SUPPORTED_CELLS)} or 'all'", file=sys.stderr)
            return 2
    kind = (SpaceKind.TENSOR_PRODUCT if args.space == "tensor_product"
            else SpaceKind.TOTAL_DEGREE)
    try:
        rows = weight_table(cells, args.degree_max, kind)
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return 2
    if args.format == "csv":
        print("cell,k,lower,upper,provenance")
        for r in rows:
            print(f"{r.cell},{r.degree},{r.lower},{r.upper},{r.provenance.value}")
    else:
        print(f"{'cell':<12} {'k':>3} {'lower':>10} {'upper':>10}  provenance")
        for r in rows:
            val = str(r.lower) if r.is_exact else f"[{r.lower}, {r.upper}]"
            print(f"{r.cell:<12} {r.degree:>3} {str(r.lower):>10} "
                  f"{str(r.upper):>10}  {r.provenance.value:<18} {val}")
    return 0


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def cmd_convergence(args) -> int:
    try:
        rows = convergence_study(args.problem, _parse_int_list(args.degrees),
                                 _parse_int_list(args.grids))
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return 2
    csv = rows_to_csv(rows)
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv)
        print(f"wrote {out}")
    else:
        sys.stdout.write(csv)
    return 0


def cmd_verify(args) -> int:
    report, status = run_verification(samples=args.samples, seed=args.seed)
    print(report)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="posflow",
        description="Outflow positivity limiting for 1D DG conservation laws")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.set_defaults(fn=cmd_run)

    p_w = sub.add_parser("weights", help="emit the interior-weight table")
    p_w.add_argument("--cell", default="all")
    p_w.add_argument("--degree-max", type=int, default=11)
    p_w.add_argument("--format", choices=("csv", "text"), default="text")
    p_w.add_argument("--space", choices=("total_degree", "tensor_product"),
                     default="total_degree")
    p_w.set_defaults(fn=cmd_weights)

    p_c = sub.add_parser("convergence", help="grid-refinement accuracy study")
    p_c.add_argument("--problem", required=True)
    p_c.add_argument("--degrees", required=True,
                     help="degrees, e.g. '1,2,3'")
    p_c.add_argument("--grids", required=True, help="cell counts, e.g. '20,40,80'")
    p_c.add_argument("--output", default=None)
    p_c.set_defaults(fn=cmd_convergence)

    p_v = sub.add_parser("verify", help="run the property suites")
    p_v.add_argument("--samples", type=int, default=20000)
    p_v.add_argument("--seed", type=int, default=0)
    p_v.set_defaults(fn=cmd_verify)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
