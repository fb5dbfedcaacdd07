"""Grid-refinement accuracy studies behind the `convergence` CLI command."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import gauss_legendre
from .riemann import FluxModel
from .solver import (Mesh1D, Operators, SolverOptions, positivity_set_for,
                     project_initial_condition, run)

SMOOTH_PROBLEMS = ("advection",)


@dataclass
class ConvergenceRow:
    problem: str
    degree: int
    cells: int
    dx: float
    limiter: str
    l1: float
    l2: float
    linf: float
    l1_order: float | None = None
    l2_order: float | None = None
    linf_order: float | None = None


def _smooth_profile(x):
    return 1.5 + np.sin(2.0 * np.pi * x)


def _errors(field, exact) -> tuple[float, float, float]:
    mesh = field.mesh
    rule = gauss_legendre(8)
    xi, w = rule.points[:, 0], rule.weights
    ops = Operators(field.degree, SolverOptions())
    V = ops.space.eval_basis(rule.points)
    x = mesh.x_lo + mesh.dx * (np.arange(mesh.cells)[:, None] + xi[None, :])
    u = np.einsum("cm,qm->cq", field.coeffs[:, 0, :], V)
    diff = u - exact(x, field.time)
    l1 = float(np.sum(np.abs(diff) * w[None, :]) * mesh.dx)
    l2 = float(np.sqrt(np.sum(diff**2 * w[None, :]) * mesh.dx))
    return l1, l2, float(np.max(np.abs(diff)))


def convergence_study(problem: str, degrees, grids, t_final: float = 1.0,
                      limiter_modes=("both", "off")) -> list[ConvergenceRow]:
    """Errors and fitted orders on a smooth positive problem.

    Only problems with a known smooth exact solution are accepted.  The step
    is capped like dx^((k+1)/rk) so the temporal error cannot mask the
    spatial order.
    """
    if problem not in SMOOTH_PROBLEMS:
        raise ValueError(
            f"convergence study needs a smooth preset problem; {problem!r} "
            f"is not one of {SMOOTH_PROBLEMS}")
    model = FluxModel.advection(1.0)
    exact = lambda x, t: _smooth_profile(x - t)
    rows: list[ConvergenceRow] = []
    for mode in limiter_modes:
        for k in degrees:
            rk = min(k + 1, 3)
            prev = None
            for nc in grids:
                mesh = Mesh1D(0.0, 1.0, nc)
                dt_cap = 0.3 * mesh.dx ** max(1.0, (k + 1) / rk)
                opts = SolverOptions(limiter_mode=mode, rk_order=rk,
                                     dt_max=dt_cap)
                pset = positivity_set_for(model, opts)
                f = project_initial_condition(mesh, model, pset, k,
                                              [_smooth_profile])
                res = run(f, opts, t_final)
                l1, l2, linf = _errors(res.field, exact)
                row = ConvergenceRow(problem, k, nc, mesh.dx, mode, l1, l2, linf)
                if prev is not None:
                    row.l1_order = math.log(prev.l1 / l1) / math.log(nc / prev.cells)
                    row.l2_order = math.log(prev.l2 / l2) / math.log(nc / prev.cells)
                    row.linf_order = math.log(prev.linf / linf) / math.log(nc / prev.cells)
                rows.append(row)
                prev = row
    return rows


def rows_to_csv(rows: list[ConvergenceRow]) -> str:
    header = ("problem,degree,cells,dx,limiter,l1_error,l2_error,linf_error,"
              "l1_order,l2_order,linf_order")
    lines = [header]
    for r in rows:
        fmt = lambda v: "" if v is None else f"{v:.6f}"
        lines.append(
            f"{r.problem},{r.degree},{r.cells},{r.dx:.8e},{r.limiter},"
            f"{r.l1:.8e},{r.l2:.8e},{r.linf:.8e},"
            f"{fmt(r.l1_order)},{fmt(r.l2_order)},{fmt(r.linf_order)}")
    return "\n".join(lines) + "\n"
