import numpy as np
import pytest

import posflow.solver as S
from posflow.riemann import FluxModel
from posflow.solver import (BoundaryCondition, DGField, Mesh1D, Operators,
                            PositivityError, SolverOptions, algorithm1_step,
                            algorithm2_step, dt_pos, dt_stable, dt_zero,
                            positivity_set_for, project_initial_condition,
                            run, semidiscrete_rhs, ssp_rk)


def make_field(model, degree, cells, ics, opts=None, bc=BoundaryCondition.PERIODIC,
               x_lo=0.0, x_hi=1.0, pad=0.0):
    opts = opts or SolverOptions()
    mesh = Mesh1D(x_lo, x_hi, cells, bc)
    pset = positivity_set_for(model, opts)
    return project_initial_condition(mesh, model, pset, degree, ics, pad=pad)


SMOOTH = lambda x: 1.5 + np.sin(2 * np.pi * x)


def test_rhs_zero_for_constant_field():
    opts = SolverOptions()
    f = make_field(FluxModel.burgers(), 2, 16, [lambda x: 2.0 + 0 * x])
    r = semidiscrete_rhs(f, Operators(2, opts), opts)
    assert np.max(np.abs(r)) < 1e-12


def test_rhs_cell_average_row_accuracy():
    """Constant-mode RHS reproduces -a du/dx cell averages to O(dx^3)."""
    errs = []
    for nc in (40, 80):
        opts = SolverOptions()
        f = make_field(FluxModel.advection(1.0), 2, nc, [SMOOTH])
        r = semidiscrete_rhs(f, Operators(2, opts), opts)
        edges = f.mesh.cell_edges()
        exact = -(SMOOTH(edges[1:]) - SMOOTH(edges[:-1])) / f.mesh.dx
        errs.append(np.max(np.abs(r[:, 0, 0] - exact)))
    assert errs[0] / errs[1] > 6.0  # ~O(dx^3)


def test_rhs_mass_telescopes():
    opts = SolverOptions()
    for model, ics in [(FluxModel.burgers(), [SMOOTH]),
                       (FluxModel.euler(1.4),
                        [lambda x: 1 + 0.2 * np.sin(2 * np.pi * x),
                         lambda x: 0.1 + 0 * x,
                         lambda x: 2.5 + 0 * x])]:
        f = make_field(model, 2, 32, ics)
        r = semidiscrete_rhs(f, Operators(2, opts), opts)
        assert np.max(np.abs(r[:, :, 0].sum(axis=0))) < 1e-13


def test_dt_stable_examples():
    opts = SolverOptions()
    f = make_field(FluxModel.advection(1.0), 2, 10, [SMOOTH])  # dx = 0.1
    assert dt_stable(f, Operators(2, opts), opts) == pytest.approx(0.1 / 2.5)
    f0 = make_field(FluxModel.advection(1.0), 0, 10, [SMOOTH])
    assert dt_stable(f0, Operators(0, opts), opts) == pytest.approx(0.2)
    # zero wave speed falls back to dt_max
    still = FluxModel.advection(0.0)
    fs = make_field(still, 1, 10, [SMOOTH])
    o = SolverOptions(dt_max=0.37)
    assert dt_stable(fs, Operators(1, o), o) == 0.37


def test_dt_pos_example():
    opts = SolverOptions(m_bar=3.0)
    f = make_field(FluxModel.advection(1.0), 2, 10, [lambda x: 1.0 + 0 * x])
    got = dt_pos(f, Operators(2, opts), opts)
    assert got == pytest.approx((1 / 3) * 0.1 / 2.0)


def test_dt_zero_examples():
    opts = SolverOptions(alpha=0.7, dt_max=100.0)
    # two cells, dx = 0.5; averages chosen so cell contents are 1 and 2
    model = FluxModel.burgers()
    mesh = Mesh1D(0.0, 1.0, 2)
    pset = positivity_set_for(model, opts)
    coeffs = np.zeros((2, 1, 2))
    coeffs[0, 0, 0] = 2.0
    coeffs[1, 0, 0] = 4.0
    f = DGField(mesh, model, pset, coeffs)
    fluxes = np.array([0.0, 2.0, 0.0])  # cell 0 sheds at rate 2
    assert dt_zero(f, opts, fluxes) == pytest.approx(0.35)
    # no net outflow anywhere: reports dt_max
    assert dt_zero(f, opts, np.array([1.0, 1.0, 1.0])) == 100.0


def test_dt_zero_euler_matches_bisection():
    opts = SolverOptions(alpha=0.7)
    model = FluxModel.euler(1.4)
    pset = positivity_set_for(model, opts)
    rng = np.random.default_rng(17)
    n = 1000
    mesh = Mesh1D(0.0, float(n), n)
    coeffs = np.zeros((n, 3, 1))
    rho = rng.uniform(0.1, 2.0, n)
    m = rng.uniform(-1.0, 1.0, n)
    E = rng.uniform(0.2, 3.0, n) + 0.5 * m**2 / rho
    coeffs[:, 0, 0], coeffs[:, 1, 0], coeffs[:, 2, 0] = rho, m, E
    f = DGField(mesh, model, pset, coeffs)
    fluxes = rng.normal(size=(n + 1, 3))
    t_closed = S._dt_zero_euler_cells(f, opts, fluxes)

    beta = (fluxes[1:] - fluxes[:-1]) / mesh.dx
    eps_r = np.minimum(opts.eps_rho, 0.5 * rho)
    eps_p = np.minimum(opts.eps_p, 0.5 * pset.pressure(coeffs[:, :, 0]))

    def feasible(i, t):
        st = coeffs[i, :, 0] - t * beta[i]
        return st[0] >= eps_r[i] and pset.pressure(st) >= eps_p[i]

    for i in range(n):
        lo, hi = 0.0, 1.0
        while feasible(i, hi) and hi < 1e12:
            lo, hi = hi, hi * 2.0
        if hi >= 1e12:
            assert t_closed[i] > 1e11
            continue
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if feasible(i, mid):
                lo = mid
            else:
                hi = mid
        assert t_closed[i] == pytest.approx(lo, rel=1e-10, abs=1e-12)


def test_algorithm1_inactive_limiter_is_bitwise_unlimited():
    model = FluxModel.advection(1.0)
    opts_on = SolverOptions(limiter_mode="both", dt_max=1e-3)
    opts_off = SolverOptions(limiter_mode="off", dt_max=1e-3)
    f1 = make_field(model, 2, 32, [SMOOTH], opts_on)
    f2 = make_field(model, 2, 32, [SMOOTH], opts_off)
    a, ia = algorithm1_step(f1, Operators(2, opts_on), opts_on, dt=1e-3)
    b, ib = algorithm1_step(f2, Operators(2, opts_off), opts_off, dt=1e-3)
    assert ia.theta_min == 1.0
    assert np.array_equal(a.coeffs, b.coeffs)


def test_algorithm_step_dispatch():
    opts = SolverOptions()
    f = make_field(FluxModel.advection(1.0), 1, 8, [SMOOTH], opts)
    with pytest.raises(ValueError):
        algorithm2_step(f, Operators(1, opts), opts)
    fe = make_field(FluxModel.euler(1.4), 1, 8,
                    [lambda x: 1 + 0 * x, lambda x: 0 * x, lambda x: 2.5 + 0 * x],
                    opts)
    with pytest.raises(ValueError):
        algorithm1_step(fe, Operators(1, opts), opts)


def test_burgers_step_keeps_averages_positive():
    opts = SolverOptions(limiter_mode="both")
    f = make_field(FluxModel.burgers(), 2, 100,
                   [lambda x: np.maximum(0.0, np.sin(2 * np.pi * x))],
                   opts, pad=1e-12)
    ops = Operators(2, opts)
    for _ in range(20):
        f, info = algorithm1_step(f, ops, opts)
    assert f.coeffs[:, 0, 0].min() >= -1e-12


def test_rk1_equals_single_step():
    model = FluxModel.burgers()
    opts = SolverOptions(limiter_mode="both", rk_order=1)
    f = make_field(model, 2, 32, [SMOOTH], opts)
    ops = Operators(2, opts)
    stepped, _ = algorithm1_step(f, ops, opts, dt_cap=np.inf)
    rk, _ = ssp_rk(f, ops, opts)
    assert np.array_equal(stepped.coeffs, rk.coeffs)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_ssp_rk_temporal_order(order):
    """Fixed fine mesh, shrinking dt: error decays at the stage order."""
    model = FluxModel.advection(1.0)
    errs = []
    dts = [4e-3, 2e-3]
    for dt in dts:
        opts = SolverOptions(limiter_mode="off", rk_order=order, dt_max=dt)
        f = make_field(model, 4, 24, [SMOOTH], opts)
        res = run(f, opts, 0.2)
        # reference: tiny-step RK3 on the same mesh
        opts_ref = SolverOptions(limiter_mode="off", rk_order=3, dt_max=2.5e-4)
        fr = make_field(model, 4, 24, [SMOOTH], opts_ref)
        ref = run(fr, opts_ref, 0.2)
        errs.append(np.max(np.abs(res.field.coeffs - ref.field.coeffs)))
    rate = np.log2(errs[0] / errs[1])
    assert rate > order - 0.35


def test_rk_stage_positivity():
    opts = SolverOptions(limiter_mode="both", rk_order=3)
    f = make_field(FluxModel.burgers(), 2, 80,
                   [lambda x: np.maximum(0.0, np.sin(2 * np.pi * x))],
                   opts, pad=1e-12)
    res = run(f, opts, 0.2)
    assert min(s.min_averages["u"] for s in res.steps) >= -1e-12


def test_run_determinism_and_threads():
    opts1 = SolverOptions(limiter_mode="both", rk_order=3, threads=1)
    opts4 = SolverOptions(limiter_mode="both", rk_order=3, threads=4)
    model = FluxModel.burgers()
    f1 = make_field(model, 2, 64, [SMOOTH], opts1)
    f2 = make_field(model, 2, 64, [SMOOTH], opts4)
    r1 = run(f1, opts1, 0.1)
    r2 = run(f2, opts4, 0.1)
    assert np.array_equal(r1.field.coeffs, r2.field.coeffs)
    f3 = make_field(model, 2, 64, [SMOOTH], opts1)
    r3 = run(f3, opts1, 0.1)
    assert np.array_equal(r1.field.coeffs, r3.field.coeffs)


def test_dt_constraints_logged_every_step():
    opts = SolverOptions(limiter_mode="both", rk_order=3)
    f = make_field(FluxModel.burgers(), 2, 60,
                   [lambda x: np.maximum(0.0, np.sin(2 * np.pi * x))],
                   opts, pad=1e-12)
    res = run(f, opts, 0.1)
    for s in res.steps:
        assert s.dt <= s.dt_stable * (1 + 1e-12)
        assert s.dt <= opts.alpha_z * s.dt_zero * (1 + 1e-12)
        # positivity CFL step never exceeds the outflow-exhaustion time
        assert s.dt_pos <= s.dt_zero / opts.alpha * (1 + 1e-9)


def test_dry_dam_break_positivity_and_mass():
    # domain wide enough that no wave reaches the outflow boundaries
    model = FluxModel.shallow_water(1.0)
    opts = SolverOptions(limiter_mode="both", rk_order=3, u_cap=2.5)
    f = make_field(model, 2, 150,
                   [lambda x: np.where(x < 0.5, 1.0, 0.0),
                    lambda x: np.zeros_like(x)],
                   opts, bc=BoundaryCondition.OUTFLOW, x_lo=-1.0, x_hi=2.0,
                   pad=1e-12)
    m0 = f.total_mass()
    res = run(f, opts, 0.2)
    assert res.status == "completed"
    assert min(s.min_averages["h"] for s in res.steps) >= -1e-12
    assert abs(res.field.total_mass()[0] - m0[0]) <= 1e-11 * m0[0]


def test_double_rarefaction_positivity():
    model = FluxModel.euler(1.4)
    opts = SolverOptions(limiter_mode="both", rk_order=3, u_cap=4.0)
    f = make_field(model, 2, 100,
                   [lambda x: np.ones_like(x),
                    lambda x: np.where(x < 0.5, -2.0, 2.0),
                    lambda x: 3.0 * np.ones_like(x)],
                   opts, bc=BoundaryCondition.OUTFLOW)
    res = run(f, opts, 0.05)
    assert res.status == "completed"
    assert min(s.min_averages["rho"] for s in res.steps) >= -1e-12
    assert min(s.min_averages["pressure"] for s in res.steps) >= -1e-12


def test_unlimited_controls_violate_positivity():
    model = FluxModel.shallow_water(1.0)
    opts = SolverOptions(limiter_mode="off", rk_order=3)
    f = make_field(model, 2, 100,
                   [lambda x: np.where(x < 0.3, 1.0, 0.0),
                    lambda x: np.zeros_like(x)],
                   opts, bc=BoundaryCondition.OUTFLOW, pad=1e-12)
    res = run(f, opts, 0.2, max_steps=2000)
    assert res.status == "positivity_violated"
    assert min(s.min_averages["h"] for s in res.steps) < 0


def test_positivity_error_reports_cell_and_time():
    model = FluxModel.burgers()
    opts = SolverOptions(limiter_mode="both")
    mesh = Mesh1D(0.0, 1.0, 4)
    pset = positivity_set_for(model, opts)
    coeffs = np.zeros((4, 1, 3))
    coeffs[:, 0, 0] = [1.0, -0.5, 1.0, 1.0]
    f = DGField(mesh, model, pset, coeffs, time=0.125)
    with pytest.raises(PositivityError, match=r"cell 1, t=0.125"):
        algorithm1_step(f, Operators(2, opts), opts)


def test_snapshot_schedule():
    opts = SolverOptions(limiter_mode="both", rk_order=2)
    f = make_field(FluxModel.advection(1.0), 1, 16, [SMOOTH], opts)
    res = run(f, opts, 0.2, snapshot_interval=0.05)
    times = [t for t, *_ in res.snapshots]
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(0.2, abs=1e-10)
    assert len(times) == 5
