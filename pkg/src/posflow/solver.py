"""1D method-of-lines DG solver with outflow positivity limiting.

Each Euler stage follows the same skeleton: damp deviations per cell
(point values, then the retentional), desingularize boundary traces where
density was limited, compute interface fluxes, pick a time step capped by
the stability estimate and by the directly computed outflow-exhaustion time,
then update all modes.  SSP Runge-Kutta wraps stages in convex combinations
with a shared time step and a halving retry when a later stage's outflow cap
is violated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import CanonicalCell, gauss_legendre
from .polyspace import PolySpace
from .positivity import (DesingMap, PositivityKind, PressureMethod,
                         StatePositivitySet, _coefficient_ranges, _certified,
                         desingularize_velocity)
from .riemann import (FluxModel, ModelKind, hll_flux, llf_flux,
                      physical_flux, speed_cap_at_node)
from .weights import retentional_points, tabulated_weight


class BoundaryCondition(Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


class PositivityError(RuntimeError):
    """A cell average left the padded positive set (invariant violation)."""

    def __init__(self, message: str, cell: int, time: float):
        super().__init__(f"{message} (cell {cell}, t={time:.6g})")
        self.cell = cell
        self.time = time


class TimeStepCollapse(RuntimeError):
    pass


class _RetryStage(Exception):
    """A later RK stage needs a smaller shared time step."""


@dataclass(frozen=True)
class Mesh1D:
    x_lo: float
    x_hi: float
    cells: int
    bc: BoundaryCondition = BoundaryCondition.PERIODIC

    def __post_init__(self):
        if self.cells < 1 or not self.x_hi > self.x_lo:
            raise ValueError("mesh needs x_hi > x_lo and cells >= 1")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.cells

    def centers(self) -> np.ndarray:
        return self.x_lo + self.dx * (np.arange(self.cells) + 0.5)

    def cell_edges(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.cells + 1)


@dataclass
class SolverOptions:
    limiter_mode: str = "both"            # off | pointwise | retentional | both
    points_mode: str = "full"             # full | minimal
    m_bar: float | None = None            # crowding cap; default tabulated
    eps_rho: float = 1e-12
    eps_p: float = 1e-12
    u_cap: float | None = None
    desing_map: DesingMap = DesingMap.CLIP
    pressure_method: PressureMethod = PressureMethod.SECANT
    flux: str = "hll"                     # hll | llf
    alpha: float = 0.7                    # outflow fraction in dt_zero
    alpha_z: float = 0.8                  # safety factor on dt_zero
    # The stability estimate uses the one-sided per-node speed cap; the
    # classical DG CFL limit 1/(2k+1) corresponds to roughly half of it,
    # so step selection applies this extra safety factor.
    cfl_safety: float = 0.45
    dt_max: float = 1.0
    rk_order: int = 3
    threads: int = 1
    bounds: tuple[float, float] | None = None  # scalar maximum principle

    def __post_init__(self):
        if self.limiter_mode not in ("off", "pointwise", "retentional", "both"):
            raise ValueError(f"unknown limiter mode {self.limiter_mode!r}")
        if self.points_mode not in ("full", "minimal"):
            raise ValueError(f"unknown points mode {self.points_mode!r}")
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.alpha_z < 1.0):
            raise ValueError("alpha and alpha_z must lie in (0, 1)")
        if self.rk_order not in (1, 2, 3):
            raise ValueError("rk_order must be 1, 2 or 3")
        if isinstance(self.desing_map, str):
            self.desing_map = DesingMap(self.desing_map)
        if isinstance(self.pressure_method, str):
            self.pressure_method = PressureMethod(self.pressure_method)


def positivity_set_for(model: FluxModel, opts: SolverOptions) -> StatePositivitySet:
    if model.kind in (ModelKind.ADVECTION, ModelKind.BURGERS):
        if opts.bounds is not None:
            lo, hi = opts.bounds
            return StatePositivitySet.scalar_bounds(lo, hi, pad=opts.eps_rho)
        return StatePositivitySet.scalar(pad=opts.eps_rho)
    if model.kind is ModelKind.SHALLOW_WATER:
        return StatePositivitySet.shallow_water(eps_rho=opts.eps_rho)
    return StatePositivitySet.euler(gamma=model.gamma, eps_rho=opts.eps_rho,
                                    eps_p=opts.eps_p)


class Operators:
    """Precomputed basis tables on the canonical [0,1] cell."""

    def __init__(self, degree: int, opts: SolverOptions):
        self.degree = degree
        self.space = PolySpace(CanonicalCell.interval(), degree)
        nm = degree + 1
        rule = gauss_legendre(max(degree, 1))
        self.quad_x = rule.points[:, 0]
        self.quad_w = rule.weights
        self.phi_quad = self.space.eval_basis(rule.points)          # (nq, nm)
        self.dphi_quad = self.space.eval_basis_deriv(rule.points)   # (nq, nm)
        ends = np.array([[0.0], [1.0]])
        pe = self.space.eval_basis(ends)
        self.phi0 = pe[0]
        self.phi1 = pe[1]
        self.bbar = 0.5 * (self.phi0 + self.phi1)                   # (nm,)
        # positivity points: boundary nodes always; volume quadrature and the
        # optimal interior points when point-wise limiting is on in "full" mode
        pts = [0.0, 1.0]
        if opts.points_mode == "full" and opts.limiter_mode in ("pointwise", "both"):
            pts.extend(self.quad_x.tolist())
            pts.extend(retentional_points("interval", degree).points[:, 0].tolist())
        self.pos_x = np.unique(np.array(pts))
        self.phi_pos = self.space.eval_basis(self.pos_x.reshape(-1, 1))
        if opts.m_bar is not None:
            self.m_bar = float(opts.m_bar)
        else:
            self.m_bar = tabulated_weight("interval", degree).upper_float
        self.flux_fn = hll_flux if opts.flux == "hll" else llf_flux


@dataclass
class DGField:
    """Mesh-wide modal coefficients: shape (cells, variables, modes)."""

    mesh: Mesh1D
    model: FluxModel
    pset: StatePositivitySet
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        nc, nv, _ = self.coeffs.shape
        if nc != self.mesh.cells or nv != self.model.n_vars:
            raise ValueError("coefficient array shape mismatch")

    @property
    def degree(self) -> int:
        return self.coeffs.shape[2] - 1

    def cell_averages(self) -> np.ndarray:
        return self.coeffs[:, :, 0].copy()

    def total_mass(self) -> np.ndarray:
        return self.mesh.dx * self.coeffs[:, :, 0].sum(axis=0)


def project_initial_condition(mesh: Mesh1D, model: FluxModel,
                              pset: StatePositivitySet, degree: int,
                              funcs, pad: float = 0.0) -> DGField:
    """Cell-wise L2 projection of per-variable callables f(x).

    The positivity variable is floored at ``pad`` before projection so dry
    or vacuum regions enter with admissible cell averages.
    """
    ops_space = PolySpace(CanonicalCell.interval(), degree)
    rule = gauss_legendre(degree + 1)
    xi = rule.points[:, 0]
    w = rule.weights
    V = ops_space.eval_basis(rule.points)  # (nq, nm)
    x_phys = mesh.x_lo + mesh.dx * (np.arange(mesh.cells)[:, None] + xi[None, :])
    coeffs = np.empty((mesh.cells, model.n_vars, degree + 1))
    for v, f in enumerate(funcs):
        fv = np.asarray(f(x_phys), dtype=float)
        if v == 0 and pad > 0.0:
            fv = np.maximum(fv, pad)
        coeffs[:, v, :] = (fv * w[None, :]) @ V
    return DGField(mesh, model, pset, coeffs)


# ---------------------------------------------------------------------------
# Vectorized per-cell limiting
# ---------------------------------------------------------------------------


def _theta_affine_vec(a_bar, a_val, pad):
    with np.errstate(divide="ignore", invalid="ignore"):
        th = (a_bar - pad) / (a_bar - a_val)
    th = np.where(np.isnan(th), 0.0, th)
    th = np.where(a_val >= pad, 1.0, th)
    return np.clip(th, 0.0, 1.0)


def _theta_pressure_vec(pset, bar, val, pad, method):
    from .positivity import _quadratic_pressure, _secant_pressure
    if method is PressureMethod.SECANT:
        return np.asarray(_secant_pressure(pset, bar, val, pad))
    return np.asarray(_quadratic_pressure(pset, bar, val, pad))


@dataclass
class _LimitStats:
    theta: np.ndarray
    quick_hits: int = 0
    triggered: int = 0
    averages_untouched: bool = True


_AVG_TOL = 1e-11  # genuine invariant violations only; pads are soft floors


def _check_averages(field: DGField, ops: Operators, opts: SolverOptions):
    pset = field.pset
    bar = field.coeffs[:, :, 0]
    if pset.kind in (PositivityKind.SCALAR, PositivityKind.SHALLOW_WATER):
        bad = np.flatnonzero(~(bar[:, 0] >= -_AVG_TOL))
        if bad.size:
            raise PositivityError("cell average violates positivity",
                                  int(bad[0]), field.time)
    elif pset.kind is PositivityKind.SCALAR_BOUNDS:
        bad = np.flatnonzero(~((bar[:, 0] >= pset.u_min - _AVG_TOL)
                               & (bar[:, 0] <= pset.u_max + _AVG_TOL)))
        if bad.size:
            raise PositivityError("cell average violates bounds",
                                  int(bad[0]), field.time)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            p = pset.pressure(bar)
        bad = np.flatnonzero(~((bar[:, 0] >= -_AVG_TOL) & (p >= -_AVG_TOL)))
        if bad.size:
            raise PositivityError("cell average outside positive set",
                                  int(bad[0]), field.time)


def _effective_pad(pad: float, current: np.ndarray) -> np.ndarray:
    """Cap the pad by the current average so draining cells stay limitable."""
    return np.minimum(pad, current)


def _limit_cells(field: DGField, ops: Operators, opts: SolverOptions) -> _LimitStats:
    """Point-wise plus retentional damping, in place.  Returns per-cell theta."""
    nc = field.mesh.cells
    stats = _LimitStats(theta=np.ones(nc))
    if opts.limiter_mode == "off":
        return stats
    _check_averages(field, ops, opts)
    mode0 = field.coeffs[:, :, 0].copy()
    pset = field.pset
    coeffs = field.coeffs
    # quick interval-arithmetic certificate
    lo, hi = _coefficient_ranges(coeffs)          # (nc, nv)
    certified = np.asarray(_certified(pset, lo.T, hi.T))
    idx = np.flatnonzero(~certified)
    stats.quick_hits = nc - idx.size
    if idx.size:
        if pset.kind is PositivityKind.EULER:
            theta_sub = _limit_euler_subset(field, ops, opts, idx)
        else:
            theta_sub = _limit_scalar_subset(field, ops, opts, idx)
        stats.theta[idx] = theta_sub
        stats.triggered = int(np.sum(theta_sub < 1.0))
    stats.averages_untouched = np.array_equal(mode0, field.coeffs[:, :, 0])
    return stats


def _retentional_on(opts: SolverOptions, ops: Operators) -> bool:
    return opts.limiter_mode in ("retentional", "both") and ops.m_bar > 1.0


def _pointwise_on(opts: SolverOptions) -> bool:
    return opts.limiter_mode in ("pointwise", "both")


def _limit_scalar_subset(field, ops, opts, idx) -> np.ndarray:
    pset = field.pset
    c = field.coeffs[idx]                      # (ns, nv, nm)
    ubar = c[:, 0, 0]
    vals = c[:, 0, :] @ ops.phi_pos.T          # (ns, npos)
    if pset.kind is PositivityKind.SCALAR_BOUNDS:
        pad_lo = _effective_pad(pset.eps_rho, ubar - pset.u_min)
        pad_hi = _effective_pad(pset.eps_rho, pset.u_max - ubar)
        th = np.minimum(
            _theta_affine_vec(ubar - pset.u_min, vals.min(axis=1) - pset.u_min,
                              pad_lo),
            _theta_affine_vec(pset.u_max - ubar, pset.u_max - vals.max(axis=1),
                              pad_hi))
    else:
        pad = _effective_pad(pset.eps_rho, ubar)
        th = _theta_affine_vec(ubar, vals.min(axis=1), pad)
    if _retentional_on(opts, ops):
        m1 = ops.m_bar - 1.0
        bd = c[:, 0, 1:] @ ops.bbar[1:]
        ret = ubar - bd / m1
        if pset.kind is PositivityKind.SCALAR_BOUNDS:
            th_r = np.minimum(
                _theta_affine_vec(ubar - pset.u_min, ret - pset.u_min,
                                  _effective_pad(pset.eps_rho, ubar - pset.u_min)),
                _theta_affine_vec(pset.u_max - ubar, pset.u_max - ret,
                                  _effective_pad(pset.eps_rho, pset.u_max - ubar)))
        else:
            th_r = _theta_affine_vec(ubar, ret, _effective_pad(pset.eps_rho, ubar))
        th = np.minimum(th, th_r)
    field.coeffs[idx, :, 1:] *= th[:, None, None]
    return th


def _limit_euler_subset(field, ops, opts, idx) -> np.ndarray:
    """Gas dynamics ordering: density (points + retentional) first, then
    pressure at points; the trace retentional runs later, after remapping."""
    pset = field.pset
    c = field.coeffs[idx]
    bar = c[:, :, 0]                              # (ns, 3)
    rho_bar = bar[:, 0]
    pad_rho = _effective_pad(pset.eps_rho, rho_bar)
    vals = np.einsum("svm,pm->spv", c, ops.phi_pos)   # (ns, npos, 3)
    th_rho = _theta_affine_vec(rho_bar[:, None], vals[:, :, 0],
                               pad_rho[:, None]).min(axis=1)
    if _retentional_on(opts, ops):
        m1 = ops.m_bar - 1.0
        bd = c[:, 0, 1:] @ ops.bbar[1:]
        th_ret = _theta_affine_vec(rho_bar, rho_bar - bd / m1, pad_rho)
        th_rho = np.minimum(th_rho, th_ret)
    vals = bar[:, None, :] + th_rho[:, None, None] * (vals - bar[:, None, :])
    pad_p = _effective_pad(pset.eps_p, pset.pressure(bar))
    th_p = _theta_pressure_vec(pset, bar[:, None, :], vals, pad_p[:, None],
                               opts.pressure_method).min(axis=1)
    th = th_rho * th_p
    field.coeffs[idx, :, 1:] *= th[:, None, None]
    return th


# ---------------------------------------------------------------------------
# Traces, fluxes, and the semidiscrete right-hand side
# ---------------------------------------------------------------------------


def _traces(coeffs: np.ndarray, ops: Operators):
    left = coeffs @ ops.phi0   # value at the cell's left edge
    right = coeffs @ ops.phi1
    return left, right


def _interface_states(field: DGField, left: np.ndarray, right: np.ndarray):
    """u_minus/u_plus at the cells+1 interfaces, honoring the BC."""
    bc = field.mesh.bc
    if bc is BoundaryCondition.PERIODIC:
        u_minus = np.concatenate([right[-1:], right], axis=0)
        u_plus = np.concatenate([left, left[:1]], axis=0)
    else:
        u_minus = np.concatenate([left[:1], right], axis=0)
        u_plus = np.concatenate([left, right[-1:]], axis=0)
    return u_minus, u_plus


def _safe_flux_states(model: FluxModel, u: np.ndarray) -> np.ndarray:
    """Clamp states for flux evaluation in unlimited control runs only."""
    if model.is_scalar:
        return u
    out = u.copy()
    out[..., 0] = np.maximum(out[..., 0], 1e-8)
    if model.kind is ModelKind.EULER:
        kin = 0.5 * out[..., 1] ** 2 / out[..., 0]
        out[..., 2] = np.maximum(out[..., 2], kin + 1e-8)
    return out


def _cell_chunks(n_cells: int, threads: int):
    threads = max(1, min(threads, n_cells))
    bounds = np.linspace(0, n_cells, threads + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _volume_term(field: DGField, ops: Operators, threads: int = 1,
                 clamp: bool = False) -> np.ndarray:
    coeffs = field.coeffs
    out = np.empty_like(coeffs)

    def work(sl: slice):
        uq = np.einsum("cvm,qm->cqv", coeffs[sl], ops.phi_quad)
        if clamp:
            uq = _safe_flux_states(field.model, uq)
        if field.model.is_scalar:
            fq = physical_flux(field.model, uq[..., 0])[..., None]
        else:
            fq = physical_flux(field.model, uq)
        out[sl] = np.einsum("cqv,q,qm->cvm", fq, ops.quad_w, ops.dphi_quad)

    chunks = _cell_chunks(field.mesh.cells, threads)
    if len(chunks) == 1:
        work(chunks[0])
    else:
        # disjoint writes and a fixed chunk layout keep the parallel path
        # bit-identical to the single-threaded one
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(work, chunks))
    return out


def semidiscrete_rhs(field: DGField, ops: Operators | None = None,
                     opts: SolverOptions | None = None,
                     fluxes: np.ndarray | None = None) -> np.ndarray:
    """Time derivative of all modal coefficients.

    The constant-mode row is the finite-volume update (net boundary flux);
    higher modes add the volume flux integral against basis derivatives.
    """
    opts = opts or SolverOptions()
    ops = ops or Operators(field.degree, opts)
    if fluxes is None:
        left, right = _traces(field.coeffs, ops)
        um, up = _interface_states(field, left, right)
        if opts.limiter_mode == "off":
            um = _safe_flux_states(field.model, um)
            up = _safe_flux_states(field.model, up)
        fluxes = _compute_fluxes(field.model, ops, um, up)
    vol = _volume_term(field, ops, opts.threads,
                       clamp=opts.limiter_mode == "off")
    h_left = fluxes[:-1]
    h_right = fluxes[1:]
    if field.model.is_scalar:
        h_left = h_left[:, None]
        h_right = h_right[:, None]
    boundary = (h_right[:, :, None] * ops.phi1[None, None, :]
                - h_left[:, :, None] * ops.phi0[None, None, :])
    return (vol - boundary) / field.mesh.dx


def _compute_fluxes(model: FluxModel, ops: Operators, u_minus, u_plus):
    if model.is_scalar:
        um = u_minus[:, 0]
        up = u_plus[:, 0]
    else:
        um, up = u_minus, u_plus
    if ops.flux_fn is llf_flux:
        return llf_flux(model, um, up)
    return hll_flux(model, um, up)


# ---------------------------------------------------------------------------
# Time-step controls
# ---------------------------------------------------------------------------


def dt_stable(field: DGField, ops: Operators, opts: SolverOptions,
              u_minus=None, u_plus=None) -> float:
    """Stability estimate dx / ((k + 1/2) * max speed cap)."""
    if u_minus is None:
        left, right = _traces(field.coeffs, ops)
        u_minus, u_plus = _interface_states(field, left, right)
    model = field.model
    if opts.limiter_mode == "off":
        u_minus = _safe_flux_states(model, u_minus)
        u_plus = _safe_flux_states(model, u_plus)
    if model.is_scalar:
        caps = speed_cap_at_node(model, u_minus[:, 0], u_plus[:, 0])
    else:
        caps = speed_cap_at_node(model, u_minus, u_plus)
    lam = float(np.max(caps))
    if lam <= 0.0:
        return opts.dt_max
    return field.mesh.dx / ((field.degree + 0.5) * lam)


def dt_pos(field: DGField, ops: Operators, opts: SolverOptions,
           u_minus=None, u_plus=None) -> float:
    """Guaranteed positivity-preserving step W * dx / (2 * max speed cap);
    logged as a diagnostic, never used to choose the step."""
    if u_minus is None:
        left, right = _traces(field.coeffs, ops)
        u_minus, u_plus = _interface_states(field, left, right)
    model = field.model
    if model.is_scalar:
        caps = speed_cap_at_node(model, u_minus[:, 0], u_plus[:, 0])
    else:
        caps = speed_cap_at_node(model, u_minus, u_plus)
    lam = float(np.max(caps))
    if lam <= 0.0:
        return opts.dt_max
    return (1.0 / ops.m_bar) * field.mesh.dx / (2.0 * lam)


def outflow_time(field: DGField, opts: SolverOptions,
                 fluxes: np.ndarray) -> float:
    """Alpha-scaled time until some cell's content (or pressure) would be
    exhausted; +inf when no cell has net outflow."""
    dx = field.mesh.dx
    pset = field.pset
    if pset.kind is not PositivityKind.EULER:
        content = dx * field.coeffs[:, 0, 0]
        if field.model.is_scalar:
            out = fluxes[1:] - fluxes[:-1]
        else:
            out = fluxes[1:, 0] - fluxes[:-1, 0]
        if np.any(content < -1e-14):
            raise PositivityError("cell content below zero in outflow cap",
                                  int(np.argmin(content)), field.time)
        pos = out > 1e-300
        if not np.any(pos):
            return np.inf
        return opts.alpha * float(np.min(content[pos] / out[pos]))
    t = _dt_zero_euler_cells(field, opts, fluxes)
    return opts.alpha * float(np.min(t))


def dt_zero(field: DGField, opts: SolverOptions, fluxes: np.ndarray) -> float:
    """Outflow-capped time step; unbounded cases report the configured
    dt_max."""
    return min(outflow_time(field, opts, fluxes), opts.dt_max)


def _dt_zero_euler_cells(field: DGField, opts: SolverOptions,
                         fluxes: np.ndarray) -> np.ndarray:
    """Per-cell first time at which the updated average leaves the padded
    set; the pressure condition is a quadratic in the step length."""
    pset = field.pset
    g1 = pset.gamma - 1.0
    bar = field.coeffs[:, :, 0]
    beta = (fluxes[1:] - fluxes[:-1]) / field.mesh.dx   # d(average)/dt outflow
    rho, m, E = bar[:, 0], bar[:, 1], bar[:, 2]
    br, bm, bE = beta[:, 0], beta[:, 1], beta[:, 2]
    # pads capped at half the current values keep the exhaustion time
    # strictly positive on cells already draining toward the floor
    eps_rho = _effective_pad(pset.eps_rho, 0.5 * rho)
    eps_p = _effective_pad(pset.eps_p, 0.5 * pset.pressure(bar))
    big = np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        t_rho = np.where(br > 0.0, (rho - eps_rho) / br, big)
    t_rho = np.maximum(t_rho, 0.0)
    # g(t) = (gamma-1) [rho(t) E(t) - m(t)^2/2] - eps_p rho(t) >= 0
    A = g1 * (br * bE - 0.5 * bm**2)
    B = -g1 * (rho * bE + br * E - m * bm) + eps_p * br
    C = g1 * (rho * E - 0.5 * m**2) - eps_p * rho
    t_p = _smallest_positive_root(A, B, C)
    return np.minimum(t_rho, t_p)


def _smallest_positive_root(A, B, C):
    """First positive root of A t^2 + B t + C with C >= 0, else +inf."""
    out = np.full(np.broadcast(A, B, C).shape, np.inf)
    lin = np.abs(A) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = -C / B
        disc = B**2 - 4.0 * A * C
        sq = np.sqrt(np.maximum(disc, 0.0))
        r1 = (-B - sq) / (2.0 * A)
        r2 = (-B + sq) / (2.0 * A)
    rlo = np.minimum(r1, r2)
    rhi = np.maximum(r1, r2)
    root = np.where(rlo > 0.0, rlo, np.where(rhi > 0.0, rhi, np.inf))
    root = np.where(disc < 0.0, np.inf, root)
    root_lin = np.where((B < 0.0) & (rl > 0.0), rl, np.inf)
    out = np.where(lin, root_lin, root)
    return np.where(np.isnan(out), np.inf, out)


# ---------------------------------------------------------------------------
# Euler stages (Algorithms for scalar/shallow-water and for gas dynamics)
# ---------------------------------------------------------------------------


@dataclass
class StageInfo:
    dt: float
    dt_stable: float
    dt_zero: float
    dt_pos: float
    theta_min: float
    triggered: int
    quick_hits: int
    averages_untouched: bool
    theta_cells: np.ndarray | None = None


def _stage(field: DGField, ops: Operators, opts: SolverOptions,
           dt: float | None, dt_cap: float) -> tuple[np.ndarray, StageInfo]:
    """One positivity-limited Euler stage; returns new coefficients.

    ``dt=None`` chooses the step from the controls; otherwise the given
    shared step is validated against this stage's own outflow cap.
    """
    stats = _limit_cells(field, ops, opts)
    left, right = _traces(field.coeffs, ops)
    theta = stats.theta
    model = field.model
    pset = field.pset

    needs_desing = (opts.limiter_mode != "off" and opts.u_cap is not None
                    and model.kind in (ModelKind.SHALLOW_WATER, ModelKind.EULER))
    if needs_desing:
        left = desingularize_velocity(left, opts.u_cap, opts.desing_map)
        right = desingularize_velocity(right, opts.u_cap, opts.desing_map)

    if (model.kind is ModelKind.EULER and _retentional_on(opts, ops)
            and opts.limiter_mode != "off"):
        # pressure retentional on the (remapped) boundary-node states
        bar = field.coeffs[:, :, 0]
        bd = 0.5 * (left + right) - bar
        ret = bar - bd / (ops.m_bar - 1.0)
        pad_p = _effective_pad(pset.eps_p, pset.pressure(bar))
        th_q = _theta_pressure_vec(pset, bar, ret, pad_p,
                                   opts.pressure_method)
        th_q = np.asarray(th_q)
        if np.any(th_q < 1.0):
            field.coeffs[:, :, 1:] *= th_q[:, None, None]
            left = bar + th_q[:, None] * (left - bar)
            right = bar + th_q[:, None] * (right - bar)
            theta = theta * th_q
            stats.triggered = int(np.sum(theta < 1.0))

    u_minus, u_plus = _interface_states(field, left, right)
    if opts.limiter_mode == "off":
        u_minus = _safe_flux_states(model, u_minus)
        u_plus = _safe_flux_states(model, u_plus)
    fluxes = _compute_fluxes(model, ops, u_minus, u_plus)

    dts = dt_stable(field, ops, opts, u_minus, u_plus)
    dtp = dt_pos(field, ops, opts, u_minus, u_plus)
    if opts.limiter_mode == "off":
        dtz = np.inf
        chosen = dt if dt is not None else min(opts.cfl_safety * dts,
                                               opts.dt_max, dt_cap)
    else:
        dtz = outflow_time(field, opts, fluxes)
        if dt is None:
            chosen = min(opts.alpha_z * dtz, opts.cfl_safety * dts,
                         opts.dt_max, dt_cap)
        else:
            chosen = dt
            if chosen > opts.alpha_z * dtz * (1.0 + 1e-12):
                raise _RetryStage()
    if chosen <= 0.0:
        raise TimeStepCollapse("time step collapse")

    rhs = semidiscrete_rhs(field, ops, opts, fluxes)
    new_coeffs = field.coeffs + chosen * rhs
    info = StageInfo(chosen, dts, dtz, dtp, float(theta.min()),
                     stats.triggered, stats.quick_hits,
                     stats.averages_untouched, theta_cells=theta)
    return new_coeffs, info


def algorithm_step(field: DGField, ops: Operators, opts: SolverOptions,
                   dt: float | None = None,
                   dt_cap: float = np.inf) -> tuple[DGField, StageInfo]:
    """Single positivity-preserving Euler step (scalar/shallow-water or gas
    dynamics, chosen by the field's model)."""
    work = DGField(field.mesh, field.model, field.pset, field.coeffs.copy(),
                   field.time)
    new_coeffs, info = _stage(work, ops, opts, dt, dt_cap)
    return (DGField(field.mesh, field.model, field.pset, new_coeffs,
                    field.time + info.dt), info)


@dataclass
class StepDiagnostics:
    time: float
    dt: float
    dt_stable: float
    dt_zero: float
    dt_pos: float
    theta_min: float
    triggered: int
    quick_hit_rate: float
    mass: np.ndarray
    min_averages: dict
    averages_untouched: bool
    retries: int = 0
    theta_cells: np.ndarray | None = None


def _min_averages(field: DGField) -> dict:
    bar = field.coeffs[:, :, 0]
    pset = field.pset
    if pset.kind in (PositivityKind.SCALAR, PositivityKind.SCALAR_BOUNDS):
        return {"u": float(bar[:, 0].min())}
    if pset.kind is PositivityKind.SHALLOW_WATER:
        return {"h": float(bar[:, 0].min())}
    return {"rho": float(bar[:, 0].min()),
            "pressure": float(pset.pressure(bar).min())}


def ssp_rk(field: DGField, ops: Operators, opts: SolverOptions,
           dt_cap: float = np.inf) -> tuple[DGField, StepDiagnostics]:
    """SSP Runge-Kutta step with a shared stage time step.

    If a later stage's outflow cap rejects the shared step, the whole step
    retries at half the step (at most 10 times).
    """
    order = opts.rk_order
    u0 = field.coeffs.copy()
    forced = None
    for retry in range(11):
        try:
            work = DGField(field.mesh, field.model, field.pset, u0.copy(),
                           field.time)
            c1, i1 = _stage(work, ops, opts, forced, dt_cap)
            dt = i1.dt
            infos = [i1]
            if order == 1:
                result = c1
            elif order == 2:
                w2 = DGField(field.mesh, field.model, field.pset, c1,
                             field.time + dt)
                c2, i2 = _stage(w2, ops, opts, dt, dt_cap)
                infos.append(i2)
                result = 0.5 * u0 + 0.5 * c2
            else:
                w2 = DGField(field.mesh, field.model, field.pset, c1,
                             field.time + dt)
                c2, i2 = _stage(w2, ops, opts, dt, dt_cap)
                u2 = 0.75 * u0 + 0.25 * c2
                w3 = DGField(field.mesh, field.model, field.pset, u2,
                             field.time + 0.5 * dt)
                c3, i3 = _stage(w3, ops, opts, dt, dt_cap)
                infos.extend([i2, i3])
                result = u0 / 3.0 + (2.0 / 3.0) * c3
            break
        except _RetryStage:
            forced = (dt if forced is None else forced) / 2.0
            if retry == 10 or forced < 1e-300:
                raise TimeStepCollapse("time step collapse during RK retries")
    out = DGField(field.mesh, field.model, field.pset, result, field.time + dt)
    theta_cells = infos[0].theta_cells.copy()
    for i in infos[1:]:
        np.minimum(theta_cells, i.theta_cells, out=theta_cells)
    diag = StepDiagnostics(
        time=out.time,
        dt=dt,
        dt_stable=infos[0].dt_stable,
        dt_zero=min(i.dt_zero for i in infos),
        dt_pos=min(i.dt_pos for i in infos),
        theta_min=min(i.theta_min for i in infos),
        triggered=sum(i.triggered for i in infos),
        quick_hit_rate=(sum(i.quick_hits for i in infos)
                        / (len(infos) * field.mesh.cells)),
        mass=out.total_mass(),
        min_averages=_min_averages(out),
        averages_untouched=all(i.averages_untouched for i in infos),
        retries=retry,
        theta_cells=theta_cells,
    )
    if diag.dt > diag.dt_stable * (1.0 + 1e-12):
        raise TimeStepCollapse("chosen dt exceeded the stability cap")
    if opts.limiter_mode != "off" and diag.dt > opts.alpha_z * diag.dt_zero * (1.0 + 1e-12):
        raise TimeStepCollapse("chosen dt exceeded the outflow cap")
    return out, diag


@dataclass
class RunResult:
    field: DGField
    snapshots: list          # (time, averages (nc,nv), minima (nc,nv), theta (nc,))
    steps: list              # StepDiagnostics
    status: str = "completed"

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def run(field: DGField, opts: SolverOptions, t_final: float,
        snapshot_interval: float | None = None,
        max_steps: int | None = None) -> RunResult:
    """March to ``t_final`` with snapshot capture.

    Unlimited control runs stop early (status ``positivity_violated``) once
    a cell-average positivity functional goes negative.
    """
    ops = Operators(field.degree, opts)
    snaps = []
    steps = []
    theta_last = np.ones(field.mesh.cells)

    def snap(fld):
        vals = np.einsum("cvm,pm->cpv", fld.coeffs, ops.phi_pos)
        snaps.append((fld.time, fld.coeffs[:, :, 0].copy(),
                      vals.min(axis=1), theta_last.copy()))

    snap_times = []
    if snapshot_interval:
        n = int(math.floor(t_final / snapshot_interval + 1e-9))
        snap_times = [i * snapshot_interval for i in range(1, n + 1)]
    if not snap_times or snap_times[-1] < t_final - 1e-12:
        snap_times.append(t_final)
    snap(field)
    next_snap = 0
    status = "completed"
    count = 0
    while field.time < t_final - 1e-12:
        if max_steps is not None and count >= max_steps:
            status = "max_steps"
            break
        target = snap_times[next_snap]
        field, diag = ssp_rk(field, ops, opts, dt_cap=target - field.time)
        theta_last = diag.theta_cells
        steps.append(diag)
        count += 1
        if opts.limiter_mode == "off":
            if min(diag.min_averages.values()) < -1e-10:
                status = "positivity_violated"
                snap(field)
                break
        if field.time >= target - 1e-12:
            snap(field)
            next_snap = min(next_snap + 1, len(snap_times) - 1)
    if status == "completed" and (not snaps or snaps[-1][0] < field.time - 1e-12):
        snap(field)
    return RunResult(field, snaps, steps, status)


def algorithm1_step(field: DGField, ops: Operators, opts: SolverOptions,
                    dt: float | None = None, dt_cap: float = np.inf):
    """Positivity-preserving Euler step for scalar laws and shallow water."""
    if field.model.kind is ModelKind.EULER:
        raise ValueError("use algorithm2_step for gas dynamics")
    return algorithm_step(field, ops, opts, dt, dt_cap)


def algorithm2_step(field: DGField, ops: Operators, opts: SolverOptions,
                    dt: float | None = None, dt_cap: float = np.inf):
    """Positivity-preserving Euler step for gas dynamics (density, pressure,
    remap, pressure retentional, outflow-capped step, modal update)."""
    if field.model.kind is not ModelKind.EULER:
        raise ValueError("algorithm2_step is the gas-dynamics step")
    return algorithm_step(field, ops, opts, dt, dt_cap)
