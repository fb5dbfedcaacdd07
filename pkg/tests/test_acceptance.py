"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its stated tolerance and time budget."""

import csv
import io
import time
from contextlib import redirect_stdout
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import posflow.solver as S
from posflow.cli import main
from posflow.riemann import FluxModel, hll_flux, speed_cap_at_node
from posflow.sampling import sample_lower_bound
from posflow.solver import (BoundaryCondition, DGField, Mesh1D,
                            SolverOptions, positivity_set_for,
                            project_initial_condition, run)
from posflow.weights import tabulated_weight

F = Fraction

# Independent transcription of the tabulated interior weights: exact values
# where known, otherwise [lower, upper] bracket strings.
TABLE = {
    "interval": {k: (str(v), str(v)) for k, v in
                 {0: 1, 1: 1, 2: 3, 3: 3, 4: 6, 5: 6, 6: 10, 7: 10,
                  8: 15, 9: 15, 10: 21, 11: 21}.items()},
    "sphere2": {k: (v, v) for k, v in
                {0: "1", 1: "1", 2: "2", 3: "2", 4: "4", 5: "4", 6: "6",
                 7: "6", 8: "9", 9: "9", 10: "12", 11: "12"}.items()},
    "sphere3": {k: (v, v) for k, v in
                {0: "1", 1: "1", 2: "5/3", 3: "5/3", 4: "10/3", 5: "10/3",
                 6: "14/3", 7: "14/3", 8: "7", 9: "7", 10: "9", 11: "9"}.items()},
    "box2": {0: ("1", "1"), 1: ("1", "1"), 2: ("2", "2"), 3: ("2", "2"),
             4: ("7/2", "4"), 5: ("7/2", "4"), 6: ("11/2", "6"),
             7: ("11/2", "6"), 8: ("8", "9"), 9: ("8", "9"),
             10: ("11", "12"), 11: ("11", "12")},
    "box3": {0: ("1", "1"), 1: ("1", "1"), 2: ("5/3", "5/3"),
             3: ("5/3", "5/3"), 4: ("8/3", "10/3"), 5: ("8/3", "10/3"),
             6: ("4", "14/3"), 7: ("4", "14/3"), 8: ("17/3", "7"),
             9: ("17/3", "7"), 10: ("23/3", "9"), 11: ("23/3", "9")},
    "triangle": {0: ("1", "1"), 1: ("1", "1"), 2: ("2", "2"),
                 3: ("20/9", "20/9"), 4: ("17/5", "6"), 5: ("7/2", "6"),
                 6: ("36/7", "10"), 7: ("21/4", "10")},
    "tetrahedron": {0: ("1", "1"), 1: ("1", "1"), 2: ("5/3", "5/3"),
                    3: ("11/6", "11/6"), 4: ("77/30", "5"), 5: ("8/3", "6"),
                    6: ("51/14", "8"), 7: ("15/4", "28/3")},
}

PRESETS = Path(__file__).resolve().parent.parent / "presets"


def report(name, ok, detail, elapsed, budget):
    line = (f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} "
            f"({detail}; {elapsed:.2f}s of {budget:.0f}s budget)")
    print(line)
    assert ok, line
    assert elapsed < budget, line


def test_criterion_1_weight_table_reproduction(capsys):
    t0 = time.monotonic()
    mismatches = []
    for cell, rows in TABLE.items():
        kmax = max(rows)
        buf = io.StringIO()
        with redirect_stdout(buf):
            assert main(["weights", "--cell", cell, "--degree-max",
                         str(kmax), "--format", "csv"]) == 0
        got = {int(r["k"]): (r["lower"], r["upper"])
               for r in csv.DictReader(buf.getvalue().splitlines())}
        for k, (lo, hi) in rows.items():
            if (F(got[k][0]), F(got[k][1])) != (F(lo), F(hi)):
                mismatches.append((cell, k, got[k], (lo, hi)))
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-1 weight-table", not mismatches,
               f"{sum(len(r) for r in TABLE.values())} entries exact, "
               f"mismatches={mismatches if mismatches else 'none'}",
               elapsed, 1.0)


def test_criterion_2_optimizer_confirmation(capsys):
    from posflow.geometry import CanonicalCell
    from posflow.weights import (crowding_of_callable, interval_optimizer,
                                 simplex_cubic_optimizer)
    t0 = time.monotonic()
    worst = 0.0
    for n in range(1, 6):
        got = crowding_of_callable(CanonicalCell.interval(),
                                   interval_optimizer(n), 4 * n + 2)
        worst = max(worst, abs(got - (n + 1) * (n + 2) / 2))
    for dim, exact in ((2, 20 / 9), (3, 11 / 6)):
        cell = CanonicalCell.simplex(dim)
        got = crowding_of_callable(cell, simplex_cubic_optimizer(cell), 10)
        worst = max(worst, abs(got - exact))
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-2 optimizer-confirmation", worst < 1e-10,
               f"max deviation {worst:.2e}", elapsed, 1.0)


def test_criterion_3_sampling_oracle(capsys):
    t0 = time.monotonic()
    fracs = {}
    for cell, k in [("interval", 2), ("interval", 4), ("interval", 6),
                    ("triangle", 2), ("triangle", 3)]:
        exact = tabulated_weight(cell, k).upper_float
        v = sample_lower_bound(cell, k, 100000, seed=7)
        fracs[(cell, k)] = v / exact
        assert v <= exact + 1e-10
    reach_ok = all(f >= 0.97 for f in fracs.values())
    sweep_ok = True
    for cell, kmax in [("interval", 11), ("box2", 11), ("box3", 11),
                       ("triangle", 7), ("tetrahedron", 7), ("sphere1", 9),
                       ("sphere2", 9), ("sphere3", 9)]:
        for k in range(kmax + 1):
            v = sample_lower_bound(cell, k, 1024, seed=31 + k)
            if v > tabulated_weight(cell, k).upper_float + 1e-10:
                sweep_ok = False
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-3 sampling-oracle", reach_ok and sweep_ok,
               f"min reach {min(fracs.values()):.4f} (>=0.97), "
               f"bracket sweep {'ok' if sweep_ok else 'violated'}",
               elapsed, 30.0)


def _random_states(model, rng, n):
    if model.is_scalar:
        return rng.uniform(0.0, 2.0, n)
    if model.n_vars == 2:
        h = rng.uniform(1e-3, 2.0, n)
        return np.stack([h, rng.uniform(-2.0, 2.0, n)], axis=1)
    rho = rng.uniform(1e-3, 2.0, n)
    m = rng.uniform(-2.0, 2.0, n)
    e = rng.uniform(0.1, 4.0, n) + 0.5 * m * m / rho
    return np.stack([rho, m, e], axis=1)


def test_criterion_4_speed_cap_property(capsys):
    t0 = time.monotonic()
    rng = np.random.default_rng(23)
    worst = -np.inf
    for model in (FluxModel.advection(1.0), FluxModel.burgers(),
                  FluxModel.shallow_water(1.0), FluxModel.euler(1.4)):
        ul = _random_states(model, rng, 1000)
        ur = _random_states(model, rng, 1000)
        lam = speed_cap_at_node(model, ul, ur)
        h = hll_flux(model, ul, ur)
        if model.is_scalar:
            slack = h - lam * ul
        else:
            slack = h[:, 0] - lam * ul[:, 0]
        worst = max(worst, float(np.max(slack)))
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-4 speed-cap", worst <= 1e-12,
               f"max Lambda(h) - lam*Lambda(u-) = {worst:.2e}", elapsed, 5.0)


@pytest.fixture(scope="module")
def positivity_runs():
    runs = {}
    opts = SolverOptions(limiter_mode="both", rk_order=3)
    f = project_initial_condition(
        Mesh1D(0.0, 1.0, 200), FluxModel.burgers(),
        positivity_set_for(FluxModel.burgers(), opts), 2,
        [lambda x: np.maximum(0.0, np.sin(2 * np.pi * x))], pad=1e-12)
    t0 = time.monotonic()
    runs["burgers"] = (run(f, opts, 0.5), time.monotonic() - t0)

    sw = FluxModel.shallow_water(1.0)
    opts_sw = SolverOptions(limiter_mode="both", rk_order=3, u_cap=2.5)
    ic_sw = [lambda x: np.where(x < 0.5, 1.0, 0.0), lambda x: np.zeros_like(x)]
    f = project_initial_condition(
        Mesh1D(-1.0, 2.0, 200, BoundaryCondition.OUTFLOW), sw,
        positivity_set_for(sw, opts_sw), 2, ic_sw, pad=1e-12)
    t0 = time.monotonic()
    runs["dam_break"] = (run(f, opts_sw, 0.25), time.monotonic() - t0)

    eu = FluxModel.euler(1.4)
    opts_eu = SolverOptions(limiter_mode="both", rk_order=3, u_cap=4.0)
    ic_eu = [lambda x: np.ones_like(x),
             lambda x: np.where(x < 0.5, -2.0, 2.0),
             lambda x: 3.0 * np.ones_like(x)]
    f = project_initial_condition(
        Mesh1D(0.0, 1.0, 200, BoundaryCondition.OUTFLOW), eu,
        positivity_set_for(eu, opts_eu), 2, ic_eu)
    t0 = time.monotonic()
    runs["double_rarefaction"] = (run(f, opts_eu, 0.1), time.monotonic() - t0)

    off_sw = SolverOptions(limiter_mode="off", rk_order=3)
    f = project_initial_condition(
        Mesh1D(-1.0, 2.0, 200, BoundaryCondition.OUTFLOW), sw,
        positivity_set_for(sw, off_sw), 2, ic_sw, pad=1e-12)
    runs["dam_break_off"] = (run(f, off_sw, 0.25, max_steps=3000), 0.0)
    off_eu = SolverOptions(limiter_mode="off", rk_order=3)
    f = project_initial_condition(
        Mesh1D(0.0, 1.0, 200, BoundaryCondition.OUTFLOW), eu,
        positivity_set_for(eu, off_eu), 2, ic_eu)
    runs["double_rarefaction_off"] = (run(f, off_eu, 0.1, max_steps=3000), 0.0)
    return runs


def test_criterion_5_positivity_preservation(positivity_runs, capsys):
    mins = {}
    slowest = 0.0
    for key, var in (("burgers", "u"), ("dam_break", "h"),
                     ("double_rarefaction", "rho")):
        res, elapsed = positivity_runs[key]
        slowest = max(slowest, elapsed)
        assert res.status == "completed"
        mins[key] = min(s.min_averages[var] for s in res.steps)
        if key == "double_rarefaction":
            mins["pressure"] = min(s.min_averages["pressure"] for s in res.steps)
    ok = all(v >= -1e-12 for v in mins.values())
    ctrl_sw, _ = positivity_runs["dam_break_off"]
    ctrl_eu, _ = positivity_runs["double_rarefaction_off"]
    sw_violates = min(min(s.min_averages.values()) for s in ctrl_sw.steps) < 0
    eu_violates = min(min(s.min_averages.values()) for s in ctrl_eu.steps) < 0
    with capsys.disabled():
        report("criterion-5 positivity",
               ok and sw_violates and eu_violates,
               f"limited minima {dict((k, f'{v:.1e}') for k, v in mins.items())}, "
               f"controls violate: sw={sw_violates} euler={eu_violates}",
               slowest, 60.0)


def test_criterion_6_conservation(capsys):
    t0 = time.monotonic()
    cases = [
        (FluxModel.advection(1.0), [lambda x: 1.5 + np.sin(2 * np.pi * x)], None),
        (FluxModel.burgers(), [lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x)], None),
        (FluxModel.shallow_water(1.0),
         [lambda x: 1 + 0.3 * np.sin(2 * np.pi * x),
          lambda x: 0.1 * np.cos(2 * np.pi * x)], 3.0),
        (FluxModel.euler(1.4),
         [lambda x: 1 + 0.2 * np.sin(2 * np.pi * x),
          lambda x: 0.1 * np.ones_like(x),
          lambda x: 2.5 + 0.2 * np.cos(2 * np.pi * x)], 3.0),
    ]
    worst_drift = 0.0
    untouched = True
    for model, ics, ucap in cases:
        opts = SolverOptions(limiter_mode="both", rk_order=3, u_cap=ucap,
                             dt_max=1e-3)
        f = project_initial_condition(Mesh1D(0.0, 1.0, 64), model,
                                      positivity_set_for(model, opts), 2, ics)
        res = run(f, opts, 1e9, max_steps=1000)
        assert res.n_steps == 1000
        m0, m1 = f.total_mass(), res.field.total_mass()
        drift = np.max(np.abs(m1 - m0) / np.maximum(np.abs(m0), 1.0))
        worst_drift = max(worst_drift, float(drift))
        untouched &= all(s.averages_untouched for s in res.steps)
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-6 conservation",
               worst_drift <= 1e-11 and untouched,
               f"max relative drift {worst_drift:.2e} over 1000 steps, "
               f"averages bit-exact: {untouched}", elapsed, 60.0)


def test_criterion_7_accuracy_retention(capsys):
    from posflow.convergence import convergence_study
    t0 = time.monotonic()
    rows = convergence_study("advection", (1, 2, 3), (20, 40, 80, 160))
    by = {}
    for r in rows:
        by[(r.limiter, r.degree, r.cells)] = r
    orders_ok, ratio_ok, details = True, True, []
    for k in (1, 2, 3):
        fin_on = by[("both", k, 160)]
        fin_off = by[("off", k, 160)]
        order = fin_on.l2_order
        details.append(f"k={k}: order {order:.2f}")
        if order < k + 0.8:
            orders_ok = False
        if abs(fin_on.l2 - fin_off.l2) > 0.01 * fin_off.l2:
            ratio_ok = False
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-7 accuracy-retention", orders_ok and ratio_ok,
               ", ".join(details) + f", on/off within 1%: {ratio_ok}",
               elapsed, 120.0)


def test_criterion_8_time_step_controls(positivity_runs, capsys):
    t0 = time.monotonic()
    alpha_z = 0.8
    constraints_ok = True
    for key in ("burgers", "dam_break", "double_rarefaction"):
        res, _ = positivity_runs[key]
        for s in res.steps:
            if s.dt > s.dt_stable * (1 + 1e-12):
                constraints_ok = False
            if s.dt > alpha_z * s.dt_zero * (1 + 1e-12):
                constraints_ok = False
    # closed-form Euler exhaustion time against a bisection oracle
    opts = SolverOptions(alpha=0.7)
    model = FluxModel.euler(1.4)
    pset = positivity_set_for(model, opts)
    rng = np.random.default_rng(41)
    n = 1000
    coeffs = np.zeros((n, 3, 1))
    rho = rng.uniform(0.1, 2.0, n)
    m = rng.uniform(-1.0, 1.0, n)
    coeffs[:, 0, 0] = rho
    coeffs[:, 1, 0] = m
    coeffs[:, 2, 0] = rng.uniform(0.2, 3.0, n) + 0.5 * m**2 / rho
    fld = DGField(Mesh1D(0.0, float(n), n), model, pset, coeffs)
    fluxes = rng.normal(size=(n + 1, 3))
    t_closed = S._dt_zero_euler_cells(fld, opts, fluxes)
    beta = (fluxes[1:] - fluxes[:-1]) / fld.mesh.dx
    eps_r = np.minimum(opts.eps_rho, 0.5 * rho)
    eps_p = np.minimum(opts.eps_p, 0.5 * pset.pressure(coeffs[:, :, 0]))
    worst = 0.0
    for i in range(n):
        if not np.isfinite(t_closed[i]) or t_closed[i] > 1e11:
            continue

        def feasible(t):
            st = coeffs[i, :, 0] - t * beta[i]
            return st[0] >= eps_r[i] and pset.pressure(st) >= eps_p[i]

        lo, hi = 0.0, max(2.0 * t_closed[i], 1e-6)
        while feasible(hi):
            lo, hi = hi, 2 * hi
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        worst = max(worst, abs(t_closed[i] - lo) / max(abs(lo), 1e-30))
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-8 time-step-controls",
               constraints_ok and worst <= 1e-10,
               f"per-step caps hold: {constraints_ok}, closed form vs "
               f"bisection rel err {worst:.2e}", elapsed, 10.0)


def test_criterion_9_first_order_oracle(capsys):
    t0 = time.monotonic()

    def oracle_llf_loop(kind, params, u0, dx, dt, steps):
        u = u0.copy()
        axis = 0

        def flux(v):
            if kind == "advection":
                return params["a"] * v
            if kind == "burgers":
                return 0.5 * v * v
            if kind == "shallow_water":
                h, q = v[:, 0], v[:, 1]
                return np.stack([q, q * q / h + 0.5 * params["g"] * h * h], 1)
            rho, m, E = v[:, 0], v[:, 1], v[:, 2]
            p = (params["gamma"] - 1) * (E - 0.5 * m * m / rho)
            return np.stack([m, m * m / rho + p, (E + p) * m / rho], 1)

        def smax(v):
            if kind == "advection":
                return abs(params["a"]) * np.ones(len(v))
            if kind == "burgers":
                return np.abs(v)
            if kind == "shallow_water":
                return np.abs(v[:, 1] / v[:, 0]) + np.sqrt(params["g"] * v[:, 0])
            rho, m, E = v[:, 0], v[:, 1], v[:, 2]
            p = (params["gamma"] - 1) * (E - 0.5 * m * m / rho)
            return np.abs(m / rho) + np.sqrt(params["gamma"] * p / rho)

        for _ in range(steps):
            um = np.concatenate([u[-1:], u], axis)
            up = np.concatenate([u, u[:1]], axis)
            s = np.maximum(smax(um), smax(up))
            if u.ndim == 1:
                h = 0.5 * (flux(um) + flux(up)) - 0.5 * s * (up - um)
            else:
                h = 0.5 * (flux(um) + flux(up)) - 0.5 * s[:, None] * (up - um)
            u = u - dt / dx * (h[1:] - h[:-1])
        return u

    cases = [
        ("advection", FluxModel.advection(1.0), {"a": 1.0},
         [lambda x: 1.5 + np.sin(2 * np.pi * x)]),
        ("burgers", FluxModel.burgers(), {},
         [lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x)]),
        ("shallow_water", FluxModel.shallow_water(1.0), {"g": 1.0},
         [lambda x: 1 + 0.3 * np.sin(2 * np.pi * x),
          lambda x: 0.1 * np.cos(2 * np.pi * x)]),
        ("euler", FluxModel.euler(1.4), {"gamma": 1.4},
         [lambda x: 1 + 0.2 * np.sin(2 * np.pi * x),
          lambda x: 0.1 * np.ones_like(x),
          lambda x: 2.5 + 0.2 * np.cos(2 * np.pi * x)]),
    ]
    worst = 0.0
    for kind, model, params, ics in cases:
        mesh = Mesh1D(0.0, 1.0, 50)
        dt = 0.2 * mesh.dx / 3.0
        opts = SolverOptions(limiter_mode="both", rk_order=1, flux="llf",
                             u_cap=3.0 if not model.is_scalar else None,
                             dt_max=dt)
        f = project_initial_condition(mesh, model,
                                      positivity_set_for(model, opts), 0, ics)
        u0 = f.coeffs[:, :, 0].copy()
        res = run(f, opts, dt * 100 * (1 + 1e-9), max_steps=100)
        assert res.n_steps == 100
        ref = oracle_llf_loop(kind, params,
                              u0 if u0.shape[1] > 1 else u0[:, 0],
                              mesh.dx, dt, 100)
        got = res.field.coeffs[:, :, 0]
        if got.shape[1] == 1:
            got = got[:, 0]
        worst = max(worst, float(np.max(np.abs(got - ref))))
    elapsed = time.monotonic() - t0
    with capsys.disabled():
        report("criterion-9 first-order-oracle", worst <= 1e-13,
               f"max per-run deviation {worst:.2e} over 100 steps x 4 models",
               elapsed, 10.0)
