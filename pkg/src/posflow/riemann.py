"""Physical flux models and positivity-preserving numerical fluxes.

State conventions: scalar models (advection, Burgers) use plain arrays of
values; systems use arrays with the conserved variables on the last axis,
``(h, hu)`` for shallow water and ``(rho, m, E)`` for gas dynamics with the
ideal-gas closure ``p = (gamma - 1)(E - m^2 / (2 rho))``.

All functions broadcast over leading axes, so one call serves a single
interface or a whole mesh of interfaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class ModelKind(Enum):
    ADVECTION = "advection"
    BURGERS = "burgers"
    SHALLOW_WATER = "shallow_water"
    EULER = "euler"


@dataclass(frozen=True)
class FluxModel:
    kind: ModelKind
    a: float = 1.0        # advection speed
    g: float = 9.81       # gravity
    gamma: float = 1.4    # adiabatic index

    @property
    def n_vars(self) -> int:
        return {ModelKind.ADVECTION: 1, ModelKind.BURGERS: 1,
                ModelKind.SHALLOW_WATER: 2, ModelKind.EULER: 3}[self.kind]

    @property
    def is_scalar(self) -> bool:
        return self.n_vars == 1

    @staticmethod
    def advection(a: float = 1.0) -> "FluxModel":
        return FluxModel(ModelKind.ADVECTION, a=a)

    @staticmethod
    def burgers() -> "FluxModel":
        return FluxModel(ModelKind.BURGERS)

    @staticmethod
    def shallow_water(g: float = 9.81) -> "FluxModel":
        return FluxModel(ModelKind.SHALLOW_WATER, g=g)

    @staticmethod
    def euler(gamma: float = 1.4) -> "FluxModel":
        return FluxModel(ModelKind.EULER, gamma=gamma)


@dataclass(frozen=True)
class SignalBounds:
    """Numerical signal speeds with s_minus <= s_plus (elementwise)."""

    s_minus: np.ndarray
    s_plus: np.ndarray


def pressure(model: FluxModel, u: np.ndarray) -> np.ndarray:
    if model.kind is not ModelKind.EULER:
        raise ValueError("pressure is defined for the Euler model")
    u = np.asarray(u, dtype=float)
    rho, m, E = u[..., 0], u[..., 1], u[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        kin = 0.5 * m**2 / rho
    kin = np.where(m == 0.0, 0.0, kin)  # continuous limit at vacuum
    return (model.gamma - 1.0) * (E - kin)


def _check_positive(model: FluxModel, u: np.ndarray) -> None:
    if model.kind is ModelKind.SHALLOW_WATER:
        if np.any(np.asarray(u)[..., 0] <= 0.0):
            raise ValueError("nonpositive depth")
    elif model.kind is ModelKind.EULER:
        if np.any(np.asarray(u)[..., 0] <= 0.0):
            raise ValueError("nonpositive density")


def physical_flux(model: FluxModel, u: np.ndarray) -> np.ndarray:
    """Flux of the conserved state; shape preserved."""
    u = np.asarray(u, dtype=float)
    if model.kind is ModelKind.ADVECTION:
        return model.a * u
    if model.kind is ModelKind.BURGERS:
        return 0.5 * u**2
    _check_positive(model, u)
    if model.kind is ModelKind.SHALLOW_WATER:
        h, q = u[..., 0], u[..., 1]
        vel = q / h
        return np.stack([q, q * vel + 0.5 * model.g * h**2], axis=-1)
    rho, m, E = u[..., 0], u[..., 1], u[..., 2]
    vel = m / rho
    p = pressure(model, u)
    return np.stack([m, m * vel + p, (E + p) * vel], axis=-1)


def wave_speed_range(model: FluxModel, u: np.ndarray):
    """(lambda_min, lambda_max) of the flux Jacobian at each state."""
    u = np.asarray(u, dtype=float)
    if model.kind is ModelKind.ADVECTION:
        a = np.broadcast_to(model.a, u.shape).astype(float)
        return a, a
    if model.kind is ModelKind.BURGERS:
        return u, u
    if model.kind is ModelKind.SHALLOW_WATER:
        h, q = u[..., 0], u[..., 1]
        vel = q / h
        c = np.sqrt(model.g * h)
        return vel - c, vel + c
    rho, m, _ = u[..., 0], u[..., 1], u[..., 2]
    vel = m / rho
    c = np.sqrt(model.gamma * pressure(model, u) / rho)
    return vel - c, vel + c


def abs_wave_speed_max(model: FluxModel, u: np.ndarray) -> np.ndarray:
    lo, hi = wave_speed_range(model, u)
    return np.maximum(np.abs(lo), np.abs(hi))


def signal_bounds(model: FluxModel, u_left: np.ndarray,
                  u_right: np.ndarray) -> SignalBounds:
    """Davis-type bounds: extreme endpoint eigenvalues of both states."""
    lo_l, hi_l = wave_speed_range(model, u_left)
    lo_r, hi_r = wave_speed_range(model, u_right)
    return SignalBounds(np.minimum(lo_l, lo_r), np.maximum(hi_l, hi_r))


def hll_flux(model: FluxModel, u_left: np.ndarray, u_right: np.ndarray,
             bounds: SignalBounds | None = None) -> np.ndarray:
    """Two-wave approximate Riemann flux.

    Inside an open fan the flux is the middle-state flux obtained by
    accounting for the material the averaged solution moves across the
    interface; outside it upwinds.  A degenerate fan (equal speeds) upwinds
    by the sign of the common speed.
    """
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    if bounds is None:
        bounds = signal_bounds(model, u_left, u_right)
    sm, sp = np.asarray(bounds.s_minus, dtype=float), np.asarray(bounds.s_plus, dtype=float)
    fl = physical_flux(model, u_left)
    fr = physical_flux(model, u_right)
    gap = sp - sm
    safe_gap = np.where(gap > 0.0, gap, 1.0)
    if not model.is_scalar:
        sm_b, sp_b = sm[..., None], sp[..., None]
        gap_b = safe_gap[..., None]
    else:
        sm_b, sp_b, gap_b = sm, sp, safe_gap
    u_star = (fl - fr + sp_b * u_right - sm_b * u_left) / gap_b
    middle = 0.5 * (fr + fl + (sp_b + sm_b) * u_star - sp_b * u_right - sm_b * u_left)
    take_left = sm >= 0.0
    take_right = sp <= 0.0
    degenerate = gap <= 0.0
    take_left = take_left | (degenerate & (sm >= 0.0))
    take_right = take_right | (degenerate & (sp < 0.0))
    if not model.is_scalar:
        take_left = take_left[..., None]
        take_right = take_right[..., None]
    return np.where(take_left, fl, np.where(take_right, fr, middle))


def llf_flux(model: FluxModel, u_left: np.ndarray, u_right: np.ndarray,
             s_max: np.ndarray | None = None) -> np.ndarray:
    """Local Lax-Friedrichs flux; the symmetric-speed special case of HLL."""
    u_left = np.asarray(u_left, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    if s_max is None:
        s_max = np.maximum(abs_wave_speed_max(model, u_left),
                           abs_wave_speed_max(model, u_right))
    s = np.asarray(s_max, dtype=float)
    if not model.is_scalar:
        s = s[..., None]
    fl = physical_flux(model, u_left)
    fr = physical_flux(model, u_right)
    return 0.5 * (fl + fr) - 0.5 * s * (u_right - u_left)


def speed_cap_at_node(model: FluxModel, u_minus: np.ndarray,
                      u_plus: np.ndarray) -> np.ndarray:
    """Bound on outgoing plus incoming signal speeds at a boundary node;
    the outgoing flux satisfies h <= cap * u_minus componentwise in every
    linear positivity functional."""
    b = signal_bounds(model, u_minus, u_plus)
    return abs_wave_speed_max(model, u_minus) + np.maximum(0.0, -b.s_minus)


def one_cell_speed_cap(model: FluxModel, z: np.ndarray, u_minus: np.ndarray,
                       u_plus: np.ndarray) -> np.ndarray:
    """Speed cap for the three-state one-cell problem: right-going signal
    bound from the upwind interface plus left-going from the downwind one."""
    left = signal_bounds(model, z, u_minus)
    right = signal_bounds(model, u_minus, u_plus)
    return np.maximum(0.0, left.s_plus) + np.maximum(0.0, -right.s_minus)


def flux_jacobian(model: FluxModel, u: np.ndarray) -> np.ndarray:
    """Jacobian d f / d u at a single state; (n_vars, n_vars)."""
    u = np.asarray(u, dtype=float)
    if model.kind is ModelKind.ADVECTION:
        return np.array([[model.a]])
    if model.kind is ModelKind.BURGERS:
        return np.array([[float(u)]])
    if model.kind is ModelKind.SHALLOW_WATER:
        h, q = float(u[0]), float(u[1])
        vel = q / h
        return np.array([[0.0, 1.0],
                         [model.g * h - vel**2, 2.0 * vel]])
    rho, m, E = (float(x) for x in u)
    g = model.gamma
    vel = m / rho
    H = (E + float(pressure(model, u))) / rho
    return np.array([
        [0.0, 1.0, 0.0],
        [0.5 * (g - 3.0) * vel**2, (3.0 - g) * vel, g - 1.0],
        [vel * (0.5 * (g - 1.0) * vel**2 - H), H - (g - 1.0) * vel**2, g * vel],
    ])


def exact_riemann_flux(model: FluxModel, u_left: float, u_right: float) -> float:
    """Interface flux of the exact Riemann solution; advection and Burgers
    only (closed forms used as test oracles)."""
    if model.kind is ModelKind.ADVECTION:
        return model.a * (u_left if model.a >= 0.0 else u_right)
    if model.kind is ModelKind.BURGERS:
        if u_left > u_right:  # shock at speed (u_left + u_right) / 2
            s = 0.5 * (u_left + u_right)
            return 0.5 * u_left**2 if s > 0.0 else 0.5 * u_right**2
        if u_left >= 0.0:
            return 0.5 * u_left**2
        if u_right <= 0.0:
            return 0.5 * u_right**2
        return 0.0  # transonic rarefaction
    raise ValueError("exact Riemann solver is provided for advection and Burgers")
