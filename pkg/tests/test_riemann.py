import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from posflow.riemann import (FluxModel, ModelKind, SignalBounds,
                             abs_wave_speed_max, exact_riemann_flux,
                             flux_jacobian, hll_flux, llf_flux, one_cell_speed_cap,
                             physical_flux, pressure, signal_bounds,
                             speed_cap_at_node, wave_speed_range)

ADV = FluxModel.advection(1.0)
BUR = FluxModel.burgers()
SW = FluxModel.shallow_water(9.81)
EU = FluxModel.euler(1.4)

RNG = np.random.default_rng(0)


def rand_state(model, rng=RNG, rho_min=1e-3):
    if model.is_scalar:
        return float(rng.uniform(0.0, 2.0))
    if model.kind is ModelKind.SHALLOW_WATER:
        return np.array([rng.uniform(rho_min, 2.0), rng.uniform(-2.0, 2.0)])
    rho = rng.uniform(rho_min, 2.0)
    m = rng.uniform(-2.0, 2.0)
    return np.array([rho, m, rng.uniform(0.1, 4.0) + 0.5 * m * m / rho])


def test_physical_flux_examples():
    assert physical_flux(BUR, 2.0) == pytest.approx(2.0)
    f = physical_flux(SW, np.array([1.0, 0.0]))
    assert np.allclose(f, [0.0, 4.905])
    f = physical_flux(EU, np.array([1.0, 0.0, 2.5]))
    assert np.allclose(f, [0.0, 1.0, 0.0])
    assert pressure(EU, np.array([1.0, 0.0, 2.5])) == pytest.approx(1.0)


def test_physical_flux_rejects_nonpositive():
    with pytest.raises(ValueError, match="depth"):
        physical_flux(SW, np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="density"):
        physical_flux(EU, np.array([-1.0, 0.0, 1.0]))


def test_signal_bounds_examples():
    b = signal_bounds(ADV, 0.3, 1.7)
    assert b.s_minus == b.s_plus == 1.0
    b = signal_bounds(BUR, 0.0, 2.0)
    assert (b.s_minus, b.s_plus) == (0.0, 2.0)
    # Sod states: Davis bounds are the extreme endpoint eigenvalues of the
    # two states, here +-sqrt(1.4) (the left sound speed dominates both sides)
    b = signal_bounds(EU, np.array([1.0, 0.0, 2.5]),
                      np.array([0.125, 0.0, 0.25]))
    assert b.s_minus == pytest.approx(-np.sqrt(1.4))
    assert b.s_plus == pytest.approx(np.sqrt(1.4))
    # and they contain the right state's eigenvalue
    assert b.s_plus >= np.sqrt(1.4 * 0.1 / 0.125)


def test_hll_consistency_all_models():
    for model in (ADV, BUR, SW, EU):
        for _ in range(100):
            u = rand_state(model)
            h = hll_flux(model, u, u)
            f = physical_flux(model, u)
            assert np.max(np.abs(np.atleast_1d(h - f))) < 1e-13


def test_hll_burgers_example():
    h = hll_flux(BUR, 1.0, 0.0, SignalBounds(np.float64(0.0), np.float64(1.0)))
    assert h == pytest.approx(0.5)
    # matches the exact Riemann shock flux here
    assert exact_riemann_flux(BUR, 1.0, 0.0) == pytest.approx(0.5)


def test_hll_upwind_regimes():
    # supersonic right: all signals positive -> left flux
    ul = np.array([1.0, 3.0, 0.5 + 0.5 * 9.0])
    ur = np.array([1.0, 2.5, 0.5 + 0.5 * 6.25])
    b = signal_bounds(EU, ul, ur)
    assert b.s_minus > 0
    assert np.allclose(hll_flux(EU, ul, ur), physical_flux(EU, ul))
    # mirrored: negate velocities and swap sides
    ul2 = ur * np.array([1, -1, 1])
    ur2 = ul * np.array([1, -1, 1])
    assert np.allclose(hll_flux(EU, ul2, ur2), physical_flux(EU, ur2))


def test_hll_two_form_equivalence():
    rng = np.random.default_rng(1)
    for _ in range(300):
        ul, ur = rand_state(EU, rng, 0.2), rand_state(EU, rng, 0.2)
        b = signal_bounds(EU, ul, ur)
        sm, sp = float(b.s_minus), float(b.s_plus)
        if not sm < 0 < sp:
            continue
        h1 = hll_flux(EU, ul, ur, b)
        h2 = (sp * physical_flux(EU, ul) - sm * physical_flux(EU, ur)
              + sm * sp * (ur - ul)) / (sp - sm)
        assert np.max(np.abs(h1 - h2)) < 1e-13


def test_llf_examples():
    u = np.array([1.0, 0.3, 2.0])
    assert np.max(np.abs(llf_flux(EU, u, u) - physical_flux(EU, u))) < 1e-15
    # pure upwind for advection with matched speed
    assert llf_flux(ADV, 1.0, 0.0, 1.0) == pytest.approx(1.0)


def test_llf_is_symmetric_hll():
    rng = np.random.default_rng(2)
    for _ in range(200):
        ul, ur = rand_state(EU, rng, 0.2), rand_state(EU, rng, 0.2)
        s = float(max(abs_wave_speed_max(EU, ul), abs_wave_speed_max(EU, ur)))
        h1 = llf_flux(EU, ul, ur, s)
        h2 = hll_flux(EU, ul, ur, SignalBounds(np.float64(-s), np.float64(s)))
        assert np.max(np.abs(h1 - h2)) <= 1e-14 * max(1.0, np.max(np.abs(h1)))


def test_speed_cap_examples():
    assert speed_cap_at_node(ADV, 1.0, 0.5) == pytest.approx(1.0)
    assert speed_cap_at_node(BUR, 1.0, 1.0) == pytest.approx(1.0)
    u = np.array([1.0, 0.5, 2.0])
    cap = speed_cap_at_node(EU, u, u)
    lo, hi = wave_speed_range(EU, u)
    assert cap == pytest.approx(max(abs(lo), abs(hi)) + max(0.0, -lo))


@pytest.mark.parametrize("model,functional", [
    (ADV, lambda u: u), (BUR, lambda u: u),
    (SW, lambda u: u[0]), (EU, lambda u: u[0])])
def test_speed_cap_bounds_outgoing_flux(model, functional):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        ul, ur = rand_state(model, rng), rand_state(model, rng)
        lam = float(speed_cap_at_node(model, ul, ur))
        h = hll_flux(model, ul, ur)
        assert functional(np.atleast_1d(h)) <= lam * functional(np.atleast_1d(ul)) + 1e-12


@pytest.mark.parametrize("model,functional", [
    (ADV, lambda u: u), (BUR, lambda u: u),
    (SW, lambda u: u[0]), (EU, lambda u: u[0])])
def test_one_cell_update_positivity(model, functional):
    rng = np.random.default_rng(4)
    for _ in range(1000):
        z, ul, ur = (rand_state(model, rng) for _ in range(3))
        lam = max(float(one_cell_speed_cap(model, z, ul, ur)), 1e-12)
        dt_over_dx = 1.0 / lam
        upd = np.atleast_1d(ul) - dt_over_dx * (
            np.atleast_1d(hll_flux(model, ul, ur))
            - np.atleast_1d(hll_flux(model, z, ul)))
        assert functional(upd) >= -1e-12


def test_degenerate_fan_upwinds():
    h = hll_flux(ADV, 2.0, 1.0)  # Davis speeds coincide at +1
    assert h == pytest.approx(physical_flux(ADV, 2.0))
    neg = FluxModel.advection(-1.0)
    h = hll_flux(neg, 2.0, 1.0)
    assert h == pytest.approx(physical_flux(neg, 1.0))


def test_exact_riemann_oracle():
    assert exact_riemann_flux(ADV, 2.0, 1.0) == pytest.approx(2.0)
    # transonic rarefaction spreads across the interface: sonic flux
    assert exact_riemann_flux(BUR, -1.0, 1.0) == pytest.approx(0.0)
    assert exact_riemann_flux(BUR, 0.5, 1.0) == pytest.approx(0.125)
    assert exact_riemann_flux(BUR, -1.0, -0.5) == pytest.approx(0.125)
    with pytest.raises(ValueError):
        exact_riemann_flux(EU, 1.0, 1.0)


def test_hll_matches_exact_riemann_in_upwind_regimes():
    rng = np.random.default_rng(5)
    for _ in range(200):
        ul, ur = rng.uniform(-2, 2, 2)
        b = signal_bounds(BUR, ul, ur)
        if b.s_minus >= 0 or b.s_plus <= 0:
            h = hll_flux(BUR, ul, ur)
            # outside the fan, HLL reproduces the exact upwind flux except
            # for the stationary-shock tie (s = 0)
            if abs(ul + ur) > 1e-12:
                assert h == pytest.approx(exact_riemann_flux(BUR, ul, ur))


def _cubic_discriminant(c):
    # for x^3 + b x^2 + c x + d
    b, cc, d = c
    return 18 * b * cc * d - 4 * b**3 * d + b**2 * cc**2 - 4 * cc**3 - 27 * d**2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hyperbolicity_spot_check(seed):
    """Flux Jacobians at positive states have real eigenvalues."""
    rng = np.random.default_rng(seed)
    u = rand_state(SW, rng, 0.05)
    J = flux_jacobian(SW, u)
    tr, det = np.trace(J), np.linalg.det(J)
    assert tr * tr - 4 * det >= -1e-12  # quadratic discriminant
    u = rand_state(EU, rng, 0.05)
    J = flux_jacobian(EU, u)
    ch = np.poly(J)  # monic characteristic polynomial coefficients
    assert _cubic_discriminant(ch[1:]) >= -1e-9
    assert np.max(np.abs(np.imag(np.linalg.eigvals(J)))) < 1e-9


def test_flux_jacobian_matches_wave_speeds():
    u = np.array([1.3, 0.4, 2.2])
    lo, hi = wave_speed_range(EU, u)
    eig = np.sort(np.linalg.eigvals(flux_jacobian(EU, u)).real)
    assert eig[0] == pytest.approx(lo, abs=1e-12)
    assert eig[-1] == pytest.approx(hi, abs=1e-12)
