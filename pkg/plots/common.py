"""Shared input parsing and deterministic figure output.

These scripts render what the solver CLI emitted and never recompute
physics.  Inputs are the documented schemas: snapshot CSVs with columns
``x_center, <var>_avg..., <var>_min..., theta``, one diagnostics JSON per
run, and the convergence order-table CSV.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# strip everything that could vary between identical reruns
PNG_METADATA = {"Software": "posflow-plots"}
matplotlib.rcParams["svg.hashsalt"] = "posflow-plots"


class FigureKind(Enum):
    SNAPSHOT = "snapshot"
    CONSERVATION = "conservation"
    MINIMA = "minima"
    CONVERGENCE = "convergence"
    WEIGHTS_TABLE = "weights_table"


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[Path, ...]
    kind: FigureKind
    output: Path

    def __post_init__(self):
        missing = [str(p) for p in self.inputs if not Path(p).exists()]
        if missing:
            raise SchemaError(f"missing input file(s): {', '.join(missing)}")


class SchemaError(ValueError):
    """An input does not match the documented schema."""


@dataclass
class Snapshot:
    path: Path
    x: list[float]
    columns: dict          # column name -> list of floats
    variables: list[str]   # base names, from the *_avg columns

    @property
    def theta(self) -> list[float]:
        return self.columns["theta"]


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    with open(path) as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        if "x_center" not in names or "theta" not in names:
            raise SchemaError(
                f"{path}: expected 'x_center' and 'theta' columns, got {names}")
        variables = [n[:-4] for n in names if n.endswith("_avg")]
        if not variables:
            raise SchemaError(f"{path}: no '<variable>_avg' columns in {names}")
        for v in variables:
            if f"{v}_min" not in names:
                raise SchemaError(f"{path}: missing column '{v}_min'")
        cols = {n: [] for n in names}
        for row in reader:
            for n in names:
                try:
                    cols[n].append(float(row[n]))
                except (TypeError, ValueError):
                    raise SchemaError(
                        f"{path}: non-numeric value in column '{n}'") from None
    return Snapshot(path, cols["x_center"], cols, variables)


def read_diagnostics(path) -> dict:
    path = Path(path)
    try:
        diag = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from None
    for key in ("steps", "config", "status"):
        if key not in diag:
            raise SchemaError(f"{path}: missing top-level key '{key}'")
    for key in ("time", "mass", "min_averages"):
        if key not in diag["steps"]:
            raise SchemaError(f"{path}: missing steps key '{key}'")
    return diag


def read_order_table(path) -> list[dict]:
    path = Path(path)
    with open(path) as fh:
        reader = csv.DictReader(fh)
        required = {"problem", "degree", "cells", "dx", "limiter", "l2_error"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise SchemaError(
                f"{path}: missing column(s) {sorted(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: empty order table")
    return rows


def save(fig, output) -> None:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, dpi=110, metadata=PNG_METADATA)
    plt.close(fig)
