"""Damping coefficients and the point-wise / retentional / bounds limiters.

A limiter rescales the deviation from the cell average by the largest
``theta in [0, 1]`` that puts the constrained values back into the positive
set; cell averages are never touched (the constant-mode coefficient is not
written).  Gas dynamics follows the fixed order: density first, then
pressure, because pressure evaluation presumes positive density.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .polyspace import Polynomial


class PositivityKind(Enum):
    SCALAR = "scalar"
    SCALAR_BOUNDS = "scalar_bounds"
    SHALLOW_WATER = "shallow_water"
    EULER = "euler"


class PressureMethod(Enum):
    QUADRATIC_ROOT = "quadratic_root"
    SECANT = "secant"


class DesingMap(Enum):
    CLIP = "clip"
    SPLINE = "spline"


@dataclass(frozen=True)
class StatePositivitySet:
    """Convex set of admissible states, with machine-epsilon pads."""

    kind: PositivityKind
    eps_rho: float = 0.0
    eps_p: float = 0.0
    u_min: float = 0.0
    u_max: float = 0.0
    gamma: float = 1.4

    @staticmethod
    def scalar(pad: float = 0.0) -> "StatePositivitySet":
        return StatePositivitySet(PositivityKind.SCALAR, eps_rho=pad)

    @staticmethod
    def scalar_bounds(u_min: float, u_max: float, pad: float = 0.0) -> "StatePositivitySet":
        if u_min >= u_max:
            raise ValueError("need u_min < u_max")
        return StatePositivitySet(PositivityKind.SCALAR_BOUNDS, eps_rho=pad,
                                  u_min=u_min, u_max=u_max)

    @staticmethod
    def shallow_water(eps_rho: float = 1e-12) -> "StatePositivitySet":
        return StatePositivitySet(PositivityKind.SHALLOW_WATER, eps_rho=eps_rho)

    @staticmethod
    def euler(gamma: float = 1.4, eps_rho: float = 1e-12,
              eps_p: float = 1e-12) -> "StatePositivitySet":
        return StatePositivitySet(PositivityKind.EULER, eps_rho=eps_rho,
                                  eps_p=eps_p, gamma=gamma)

    @property
    def n_vars(self) -> int:
        return {PositivityKind.SCALAR: 1, PositivityKind.SCALAR_BOUNDS: 1,
                PositivityKind.SHALLOW_WATER: 2, PositivityKind.EULER: 3}[self.kind]

    def pressure(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        rho, m, E = state[..., 0], state[..., 1], state[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            kin = 0.5 * m**2 / rho
        kin = np.where(m == 0.0, 0.0, kin)  # continuous limit at vacuum
        return (self.gamma - 1.0) * (E - kin)

    def contains(self, state: np.ndarray, slack: float = 0.0) -> np.ndarray:
        """Membership in the padded set; broadcasts over leading axes."""
        state = np.asarray(state, dtype=float)
        if self.kind is PositivityKind.SCALAR:
            return state >= self.eps_rho - slack
        if self.kind is PositivityKind.SCALAR_BOUNDS:
            return (state >= self.u_min + self.eps_rho - slack) & (
                state <= self.u_max - self.eps_rho + slack)
        if self.kind is PositivityKind.SHALLOW_WATER:
            return state[..., 0] >= self.eps_rho - slack
        ok_rho = state[..., 0] >= self.eps_rho - slack
        with np.errstate(invalid="ignore", divide="ignore"):
            p = self.pressure(state)
        return ok_rho & (p >= self.eps_p - slack)


@dataclass(frozen=True)
class DampingResult:
    theta: float
    triggered: bool
    binding_constraint: str = ""

    def __post_init__(self):
        if (self.theta == 1.0) == self.triggered:
            raise ValueError("triggered must hold exactly when theta < 1")


# ---------------------------------------------------------------------------
# Damping coefficients
# ---------------------------------------------------------------------------


def damping_affine(a_bar, a_val, pad=0.0):
    """Largest theta in [0,1] with (1-theta) a_bar + theta a_val >= pad.

    Vectorized; raises if the average itself violates the padded constraint.
    """
    a_bar = np.asarray(a_bar, dtype=float)
    a_val = np.asarray(a_val, dtype=float)
    if np.any(a_bar < pad):
        raise ValueError("cell average violates positivity")
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (a_bar - pad) / (a_bar - a_val)
    theta = np.where(a_val >= pad, 1.0, theta)
    out = np.clip(theta, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


_PAD_SLACK = 1e-11  # roundoff allowance on precondition checks


def _secant_pressure(pset: StatePositivitySet, state_bar, state_val, pad):
    p_bar = pset.pressure(state_bar)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_val = pset.pressure(state_val)
    if np.any(p_bar < pad - _PAD_SLACK):
        raise ValueError("average outside positive set")
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = (p_bar - pad) / (p_bar - p_val)
    theta = np.where(np.isnan(theta), 0.0, theta)
    theta = np.where(p_val >= pad, 1.0, theta)
    out = np.clip(theta, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _quadratic_pressure(pset: StatePositivitySet, state_bar, state_val, pad):
    """Smallest root in [0,1] of the quadratic rho*p - pad-scaled constraint
    along the segment, or 1 when the endpoint already satisfies the pad."""
    sb = np.asarray(state_bar, dtype=float)
    sv = np.asarray(state_val, dtype=float)
    p_bar = pset.pressure(sb)
    if np.any(p_bar < pad - _PAD_SLACK):
        raise ValueError("average outside positive set")
    d = sv - sb

    def q(th):
        s = sb + th * d
        rho, m, E = s[..., 0], s[..., 1], s[..., 2]
        return rho * E - 0.5 * m**2 - rho * pad / (pset.gamma - 1.0)

    # q(theta) = a theta^2 + b theta + c, sampled exactly at 0, 1/2, 1
    q0, qh, q1 = q(0.0), q(0.5), q(1.0)
    a = 2.0 * q0 + 2.0 * q1 - 4.0 * qh
    b = -3.0 * q0 - q1 + 4.0 * qh
    c = q0
    with np.errstate(invalid="ignore", divide="ignore"):
        p_val = pset.pressure(sv)
    theta = np.ones(np.broadcast(q0, q1).shape)
    need = ~(np.asarray(p_val) >= pad)  # catches NaN endpoints too
    if np.any(need):
        aa, bb, cc = (np.broadcast_to(x, theta.shape).astype(float) for x in (a, b, c))
        lin = np.abs(aa) < 1e-14 * np.maximum(1.0, np.abs(bb))
        with np.errstate(divide="ignore", invalid="ignore"):
            rl = -cc / bb
            disc = bb**2 - 4.0 * aa * cc
            sq = np.sqrt(np.maximum(disc, 0.0))
            r1 = (-bb - sq) / (2.0 * aa)
            r2 = (-bb + sq) / (2.0 * aa)
        rq = np.where(np.minimum(r1, r2) >= 0.0, np.minimum(r1, r2),
                      np.maximum(r1, r2))
        cand = np.where(lin, rl, rq)
        # the sign change guarantees a root; fall back to the (safe) secant
        # value only against numerical corner cases
        fallback = _secant_pressure(pset, sb, sv, pad)
        good = np.isfinite(cand) & (cand >= 0.0) & (cand <= 1.0)
        root = np.where(good, cand, fallback)
        theta = np.where(need, root, theta)
    out = np.clip(theta, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def damping_pressure(state_bar, state_val, pad: float = 0.0,
                     method: PressureMethod = PressureMethod.SECANT,
                     gamma: float = 1.4):
    """Largest safe theta for the pressure constraint along a state segment.

    The secant rule treats the (concave) pressure as linear and therefore
    never overshoots; the quadratic-root variant solves rho*p exactly.
    """
    pset = StatePositivitySet.euler(gamma=gamma)
    if method is PressureMethod.SECANT:
        return _secant_pressure(pset, state_bar, state_val, pad)
    return _quadratic_pressure(pset, state_bar, state_val, pad)


# ---------------------------------------------------------------------------
# Limiters on per-cell polynomials
# ---------------------------------------------------------------------------


def _stack_values(polys: list[Polynomial], points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    space = polys[0].space
    pts = pts.reshape(-1, space.cell.dim)
    basis = space.eval_basis(pts)
    return np.stack([basis @ p.coeffs for p in polys], axis=-1)  # (npts, nvars)


def _averages(polys: list[Polynomial]) -> np.ndarray:
    return np.array([p.coeffs[0] for p in polys])


def _damp(polys: list[Polynomial], theta: float) -> list[Polynomial]:
    if theta >= 1.0:
        return polys
    out = []
    for p in polys:
        c = p.coeffs.copy()
        c[1:] *= theta
        out.append(Polynomial(p.space, c))
    return out


def _pointwise_theta(pset: StatePositivitySet, bar: np.ndarray,
                     vals: np.ndarray,
                     method: PressureMethod = PressureMethod.SECANT):
    """(theta, label) for values (npts, nvars) against averages (nvars,)."""
    if pset.kind in (PositivityKind.SCALAR, PositivityKind.SHALLOW_WATER):
        v = vals[..., 0]
        th = damping_affine(bar[0], v.min(), pset.eps_rho)
        return th, th, 1.0, "positivity"
    if pset.kind is PositivityKind.SCALAR_BOUNDS:
        v = vals[..., 0]
        lo = damping_affine(bar[0] - pset.u_min, v.min() - pset.u_min, pset.eps_rho)
        hi = damping_affine(pset.u_max - bar[0], pset.u_max - v.max(), pset.eps_rho)
        label = "lower_bound" if lo <= hi else "upper_bound"
        return min(lo, hi), min(lo, hi), 1.0, label
    # Euler: density first, then pressure on the density-damped values.
    th_rho = float(np.min(damping_affine(bar[0], vals[..., 0], pset.eps_rho)))
    vals2 = bar + th_rho * (vals - bar)
    th_p = float(np.min(damping_pressure(bar, vals2, pset.eps_p,
                                         method, pset.gamma)))
    label = "density" if th_rho < 1.0 else ("pressure" if th_p < 1.0 else "")
    return th_rho * th_p, th_rho, th_p, label


def limit_pointwise(polys: list[Polynomial], points, pset: StatePositivitySet,
                    method: PressureMethod = PressureMethod.SECANT):
    """Damp the deviations so every listed point satisfies the padded set.

    Returns ``(DampingResult, damped polynomials)``; cell averages are
    untouched.
    """
    if len(polys) != pset.n_vars:
        raise ValueError("one polynomial per conserved variable required")
    bar = _averages(polys)
    vals = _stack_values(polys, points)
    theta, th1, th2, label = _pointwise_theta(pset, bar, vals, method)
    if pset.kind is PositivityKind.EULER:
        damped = _damp(_damp(polys, th1), th2)
    else:
        damped = _damp(polys, theta)
    res = DampingResult(float(theta), theta < 1.0, label if theta < 1.0 else "")
    return res, damped


def _retentional_endpoint(polys: list[Polynomial], m_bar: float) -> np.ndarray:
    """State of the unital retentional at theta = 1."""
    space = polys[0].space
    bbar = space.basis_boundary_face_average()
    out = np.empty(len(polys))
    for i, p in enumerate(polys):
        bd = float(bbar[1:] @ p.coeffs[1:])
        out[i] = p.coeffs[0] - bd / (m_bar - 1.0)
    return out


def limit_retentional(polys: list[Polynomial], m_bar: float,
                      pset: StatePositivitySet,
                      method: PressureMethod = PressureMethod.SECANT):
    """Damp the deviations until the unital retentional state is admissible.

    The retentional blends the cell average against the boundary face
    average; its positivity caps the boundary crowding of every affine
    positivity functional at ``m_bar``.
    """
    if m_bar <= 1.0:
        raise ValueError("retentional limiting needs m_bar > 1")
    if len(polys) != pset.n_vars:
        raise ValueError("one polynomial per conserved variable required")
    bar = _averages(polys)
    ret = _retentional_endpoint(polys, m_bar)
    if pset.kind in (PositivityKind.SCALAR, PositivityKind.SHALLOW_WATER):
        theta = damping_affine(bar[0], ret[0], pset.eps_rho)
        label = "retentional"
    elif pset.kind is PositivityKind.SCALAR_BOUNDS:
        lo = damping_affine(bar[0] - pset.u_min, ret[0] - pset.u_min, pset.eps_rho)
        hi = damping_affine(pset.u_max - bar[0], pset.u_max - ret[0], pset.eps_rho)
        theta, label = min(lo, hi), "retentional"
    else:
        th_rho = damping_affine(bar[0], ret[0], pset.eps_rho)
        th_p = damping_pressure(bar, ret, pset.eps_p, method, pset.gamma)
        theta, label = min(th_rho, th_p), "retentional"
    theta = float(theta)
    damped = _damp(polys, theta)
    res = DampingResult(theta, theta < 1.0, label if theta < 1.0 else "")
    return res, damped


# ---------------------------------------------------------------------------
# Wave-speed desingularization and the quick certificate
# ---------------------------------------------------------------------------


def _r1(x: np.ndarray, desing_map: DesingMap) -> np.ndarray:
    x = np.minimum(x, 1.0)
    if desing_map is DesingMap.CLIP:
        return x
    return x * (2.0 - x)


def desingularize_velocity(state: np.ndarray, u_cap: float,
                           desing_map: DesingMap = DesingMap.CLIP) -> np.ndarray:
    """Remap the velocity of a conserved state to tame wave speeds.

    Shallow water states are ``(h, hu)``; gas states ``(rho, m, E)``, where
    the internal energy is preserved under the momentum remap.  The clip map
    caps the speed at ``u_cap`` exactly; the spline variant is smooth and
    caps at twice that.
    """
    state = np.asarray(state, dtype=float)
    nv = state.shape[-1]
    if nv not in (2, 3):
        raise ValueError("expected a shallow-water or gas-dynamics state")
    rho = state[..., 0]
    m = state[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        speed = np.abs(m) / rho
        factor = np.where(speed > 0.0, _r1(u_cap / np.where(speed > 0, speed, 1.0),
                                           DesingMap(desing_map)), 1.0)
    m_new = m * factor
    out = state.copy()
    out[..., 1] = m_new
    if nv == 3:
        e_int = state[..., 2] - 0.5 * m**2 / rho
        out[..., 2] = e_int + 0.5 * m_new**2 / rho
    return out


def quick_positivity_check(polys: list[Polynomial],
                           pset: StatePositivitySet) -> bool:
    """Interval-arithmetic certificate: True only when modal coefficient
    bounds prove the padded set everywhere in the cell.  Never a false
    positive; falls through (False) for non-interval bases."""
    space = polys[0].space
    if not space.is_interval:
        return False
    lo, hi = _coefficient_ranges(np.stack([p.coeffs for p in polys]))
    return bool(_certified(pset, lo, hi))


def _coefficient_ranges(coeffs: np.ndarray):
    """Global bounds from |phi_m| <= sqrt(2m+1) on the interval.

    ``coeffs``: (..., n_modes); returns (lo, hi) of shape (...,).
    """
    nm = coeffs.shape[-1]
    amp = np.sqrt(2.0 * np.arange(nm) + 1.0)
    slack = np.abs(coeffs[..., 1:]) @ amp[1:]
    return coeffs[..., 0] - slack, coeffs[..., 0] + slack


def _certified(pset: StatePositivitySet, lo: np.ndarray, hi: np.ndarray):
    """Certificate from per-variable ranges; leading axis = variable."""
    if pset.kind is PositivityKind.SCALAR:
        return lo[0] >= pset.eps_rho
    if pset.kind is PositivityKind.SCALAR_BOUNDS:
        return (lo[0] >= pset.u_min + pset.eps_rho) & (hi[0] <= pset.u_max - pset.eps_rho)
    if pset.kind is PositivityKind.SHALLOW_WATER:
        return lo[0] >= pset.eps_rho
    rho_lo, rho_hi = lo[0], hi[0]
    e_lo = lo[2]
    m_max = np.maximum(np.abs(lo[1]), np.abs(hi[1]))
    p_min = rho_lo * e_lo - 0.5 * m_max**2
    return ((rho_lo >= pset.eps_rho) & (e_lo >= 0.0)
            & (p_min >= rho_hi * pset.eps_p / (pset.gamma - 1.0)))
