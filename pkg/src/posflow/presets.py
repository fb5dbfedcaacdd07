"""Named initial conditions and piecewise-polynomial tables.

Presets return one callable per conserved variable; no expression language
is interpreted, which keeps runs deterministic.
"""

from __future__ import annotations

import numpy as np

from .config import ConfigError
from .riemann import FluxModel, ModelKind


def _sine(params):
    off = params.get("offset", 1.5)
    amp = params.get("amplitude", 1.0)
    freq = params.get("frequency", 1.0)
    clamp = params.get("clamp_min", None)

    def f(x):
        v = off + amp * np.sin(2.0 * np.pi * freq * x)
        return np.maximum(v, clamp) if clamp is not None else v

    return [f]


def _square(params):
    lo = params.get("lo", 0.0)
    hi = params.get("hi", 1.0)
    x0 = params.get("x_lo", 0.25)
    x1 = params.get("x_hi", 0.75)
    return [lambda x: np.where((x >= x0) & (x < x1), hi, lo)]


def _riemann_pair(params, n_vars):
    left = np.asarray(params["left"], dtype=float)
    right = np.asarray(params["right"], dtype=float)
    if left.shape != (n_vars,) or right.shape != (n_vars,):
        raise ConfigError(
            f"initial_condition.params: left/right need {n_vars} entries")
    xj = params.get("x_jump", 0.5)
    return [
        (lambda v: (lambda x: np.where(x < xj, left[v], right[v])))(v)
        for v in range(n_vars)
    ]


def _dam_break(params):
    h_left = params.get("h_left", 1.0)
    h_right = params.get("h_right", 0.0)
    xj = params.get("x_jump", 0.3)
    return [lambda x: np.where(x < xj, h_left, h_right),
            lambda x: np.zeros_like(x)]


def _euler_primitive_jump(left_prim, right_prim, xj, gamma):
    (rl, ul, pl), (rr, ur, pr) = left_prim, right_prim

    def conserved(rho, u, p):
        return rho, rho * u, p / (gamma - 1.0) + 0.5 * rho * u * u

    cl = conserved(rl, ul, pl)
    cr = conserved(rr, ur, pr)
    return [
        (lambda v: (lambda x: np.where(x < xj, cl[v], cr[v])))(v)
        for v in range(3)
    ]


def _sod(params, gamma):
    return _euler_primitive_jump(
        params.get("left", (1.0, 0.0, 1.0)),
        params.get("right", (0.125, 0.0, 0.1)),
        params.get("x_jump", 0.5), gamma)


def _double_rarefaction(params, gamma):
    u0 = params.get("speed", 2.0)
    p0 = params.get("p", 0.4)
    return _euler_primitive_jump((1.0, -u0, p0), (1.0, u0, p0),
                                 params.get("x_jump", 0.5), gamma)


def _shu_osher_positive(params, gamma):
    """Shock running into a smooth positive density wave."""
    xj = params.get("x_jump", -4.0)
    amp = params.get("amplitude", 0.2)
    freq = params.get("frequency", 5.0)
    rho_l, u_l, p_l = 3.857143, 2.629369, 10.33333

    def rho(x):
        return np.where(x < xj, rho_l, 1.0 + amp * np.sin(freq * x))

    def mom(x):
        return np.where(x < xj, rho_l * u_l, 0.0)

    def energy(x):
        p = np.where(x < xj, p_l, 1.0)
        return p / (gamma - 1.0) + 0.5 * mom(x) ** 2 / rho(x)

    return [rho, mom, energy]


def _sw_sine(params, g):
    h0 = params.get("depth", 1.0)
    ha = params.get("depth_amplitude", 0.3)
    u0 = params.get("velocity", 0.1)
    freq = params.get("frequency", 1.0)

    def h(x):
        return h0 + ha * np.sin(2.0 * np.pi * freq * x)

    return [h, lambda x: u0 * h(x)]


def _euler_sine(params, gamma):
    r0 = params.get("density", 1.0)
    ra = params.get("density_amplitude", 0.2)
    u0 = params.get("velocity", 0.1)
    p0 = params.get("pressure", 1.0)
    freq = params.get("frequency", 1.0)

    def rho(x):
        return r0 + ra * np.sin(2.0 * np.pi * freq * x)

    def mom(x):
        return u0 * rho(x)

    def energy(x):
        return p0 / (gamma - 1.0) + 0.5 * mom(x) ** 2 / rho(x)

    return [rho, mom, energy]


def _table_functions(table, n_vars):
    if len(table) != n_vars:
        raise ConfigError(
            f"initial_condition.table: need {n_vars} variable entries")

    def make(segments):
        def f(x):
            out = np.zeros_like(np.asarray(x, dtype=float))
            for seg in segments:
                mask = (x >= seg["x_lo"]) & (x < seg["x_hi"])
                val = np.zeros_like(out)
                for c in reversed(seg["coeffs"]):
                    val = val * x + c
                out = np.where(mask, val, out)
            return out

        return f

    return [make(segments) for segments in table]


_SCALAR_PRESETS = ("sine", "square", "riemann")
_SW_PRESETS = ("dam_break", "riemann", "sw_sine")
_EULER_PRESETS = ("sod", "double_rarefaction", "shu_osher", "riemann",
                  "euler_sine")


def initial_condition_functions(cfg: dict, model: FluxModel):
    """Per-variable callables for the configured initial condition."""
    ic = cfg["initial_condition"]
    if "table" in ic:
        return _table_functions(ic["table"], model.n_vars)
    name = ic["preset"]
    params = ic.get("params", {})
    kind = model.kind
    if kind in (ModelKind.ADVECTION, ModelKind.BURGERS):
        allowed = _SCALAR_PRESETS
    elif kind is ModelKind.SHALLOW_WATER:
        allowed = _SW_PRESETS
    else:
        allowed = _EULER_PRESETS
    if name not in allowed:
        raise ConfigError(
            f"initial_condition.preset: {name!r} is not defined for "
            f"{cfg['problem']['name']} (choose from {', '.join(allowed)})")
    if name == "sine":
        return _sine(params)
    if name == "square":
        return _square(params)
    if name == "riemann":
        return _riemann_pair(params, model.n_vars)
    if name == "dam_break":
        return _dam_break(params)
    if name == "sw_sine":
        return _sw_sine(params, model.g)
    if name == "sod":
        return _sod(params, model.gamma)
    if name == "double_rarefaction":
        return _double_rarefaction(params, model.gamma)
    if name == "shu_osher":
        return _shu_osher_positive(params, model.gamma)
    if name == "euler_sine":
        return _euler_sine(params, model.gamma)
    raise ConfigError(f"initial_condition.preset: unknown preset {name!r}")
