"""Run configuration: JSON schema, validation, and solver assembly."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .positivity import DesingMap, PressureMethod
from .riemann import FluxModel, ModelKind
from .solver import (BoundaryCondition, DGField, Mesh1D, SolverOptions,
                     positivity_set_for, project_initial_condition)

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["problem", "initial_condition", "mesh", "space", "time"],
    "additionalProperties": False,
    "properties": {
        "problem": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["advection", "burgers", "shallow_water", "euler"]},
                "a": {"type": "number"},
                "g": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 1},
            },
        },
        "initial_condition": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"type": "string"},
                "params": {"type": "object"},
                "table": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["x_lo", "x_hi", "coeffs"],
                            "additionalProperties": False,
                            "properties": {
                                "x_lo": {"type": "number"},
                                "x_hi": {"type": "number"},
                                "coeffs": {"type": "array",
                                           "items": {"type": "number"}},
                            },
                        },
                    },
                },
            },
        },
        "mesh": {
            "type": "object",
            "required": ["x_lo", "x_hi", "cells"],
            "additionalProperties": False,
            "properties": {
                "x_lo": {"type": "number"},
                "x_hi": {"type": "number"},
                "cells": {"type": "integer", "minimum": 1},
                "bc": {"enum": ["periodic", "outflow"]},
            },
        },
        "space": {
            "type": "object",
            "required": ["degree"],
            "additionalProperties": False,
            "properties": {
                "degree": {"type": "integer", "minimum": 0},
                "kind": {"enum": ["total_degree", "tensor_product"]},
            },
        },
        "rk_order": {"enum": [1, 2, 3]},
        "limiter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["off", "pointwise", "retentional", "both"]},
                "points": {"enum": ["full", "minimal"]},
                "m_bar": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "eps_rho": {"type": "number", "minimum": 0},
                "eps_p": {"type": "number", "minimum": 0},
                "u_cap": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "desing_map": {"enum": ["clip", "spline"]},
                "pressure_method": {"enum": ["secant", "quadratic_root"]},
                "bounds": {
                    "type": ["array", "null"],
                    "items": {"type": "number"},
                    "minItems": 2, "maxItems": 2,
                },
            },
        },
        "time": {
            "type": "object",
            "required": ["t_final"],
            "additionalProperties": False,
            "properties": {
                "t_final": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0,
                          "exclusiveMaximum": 1},
                "alpha_z": {"type": "number", "exclusiveMinimum": 0,
                            "exclusiveMaximum": 1},
                "cfl_safety": {"type": "number", "exclusiveMinimum": 0,
                               "maximum": 1},
                "dt_max": {"type": "number", "exclusiveMinimum": 0},
                "snapshot_interval": {"type": ["number", "null"],
                                      "exclusiveMinimum": 0},
                "max_steps": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": ["string", "null"]},
                "prefix": {"type": ["string", "null"]},
            },
        },
        "threads": {"type": "integer", "minimum": 1},
    },
}

_DEFAULTS = {
    "problem": {"a": 1.0, "g": 9.81, "gamma": 1.4},
    "mesh": {"bc": "periodic"},
    "space": {"kind": "total_degree"},
    "rk_order": 3,
    "limiter": {"mode": "both", "points": "full", "m_bar": None,
                "eps_rho": 1e-12, "eps_p": 1e-12, "u_cap": None,
                "desing_map": "clip", "pressure_method": "secant",
                "bounds": None},
    "time": {"alpha": 0.7, "alpha_z": 0.8, "cfl_safety": 0.45, "dt_max": 1.0,
             "snapshot_interval": None, "max_steps": None},
    "output": {"dir": None, "prefix": None},
    "threads": 1,
}


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


def _apply_defaults(raw: dict) -> dict:
    cfg = json.loads(json.dumps(raw))  # deep copy, JSON-clean
    for key, block in _DEFAULTS.items():
        if isinstance(block, dict):
            cfg.setdefault(key, {})
            for k, v in block.items():
                cfg[key].setdefault(k, v)
        else:
            cfg.setdefault(key, block)
    return cfg


def validate_config(raw: dict) -> dict:
    """Validate and expand defaults; raises ConfigError naming field paths."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors:
            path = ".".join(str(p) for p in e.absolute_path)
            if e.validator == "required":
                missing = e.message.split("'")[1]
                path = f"{path}.{missing}" if path else missing
            msgs.append(f"{path or '<root>'}: {e.message}")
        raise ConfigError("; ".join(msgs))
    cfg = _apply_defaults(raw)
    ic = cfg["initial_condition"]
    if ("preset" in ic) == ("table" in ic):
        raise ConfigError(
            "initial_condition: exactly one of 'preset' or 'table' is required")
    if cfg["mesh"]["x_hi"] <= cfg["mesh"]["x_lo"]:
        raise ConfigError("mesh.x_hi: must exceed mesh.x_lo")
    name = cfg["problem"]["name"]
    lim = cfg["limiter"]
    if lim["bounds"] is not None:
        if name not in ("advection", "burgers"):
            raise ConfigError("limiter.bounds: only valid for scalar problems")
        if lim["bounds"][0] >= lim["bounds"][1]:
            raise ConfigError("limiter.bounds: need bounds[0] < bounds[1]")
    if (name in ("shallow_water", "euler") and lim["mode"] != "off"
            and lim["u_cap"] is None):
        raise ConfigError(
            "limiter.u_cap: required for shallow_water/euler runs (no "
            "universal default exists; set it from problem knowledge)")
    return cfg


def model_from_config(cfg: dict) -> FluxModel:
    p = cfg["problem"]
    return {
        "advection": lambda: FluxModel.advection(p["a"]),
        "burgers": FluxModel.burgers,
        "shallow_water": lambda: FluxModel.shallow_water(p["g"]),
        "euler": lambda: FluxModel.euler(p["gamma"]),
    }[p["name"]]()


def solver_options_from_config(cfg: dict) -> SolverOptions:
    lim = cfg["limiter"]
    t = cfg["time"]
    bounds = tuple(lim["bounds"]) if lim["bounds"] is not None else None
    return SolverOptions(
        limiter_mode=lim["mode"],
        points_mode=lim["points"],
        m_bar=lim["m_bar"],
        eps_rho=lim["eps_rho"],
        eps_p=lim["eps_p"],
        u_cap=lim["u_cap"],
        desing_map=DesingMap(lim["desing_map"]),
        pressure_method=PressureMethod(lim["pressure_method"]),
        alpha=t["alpha"],
        alpha_z=t["alpha_z"],
        cfl_safety=t["cfl_safety"],
        dt_max=t["dt_max"],
        rk_order=cfg["rk_order"],
        threads=cfg["threads"],
        bounds=bounds,
    )


def build_field(cfg: dict) -> DGField:
    from .presets import initial_condition_functions
    model = model_from_config(cfg)
    opts = solver_options_from_config(cfg)
    mesh = Mesh1D(cfg["mesh"]["x_lo"], cfg["mesh"]["x_hi"], cfg["mesh"]["cells"],
                  BoundaryCondition(cfg["mesh"]["bc"]))
    pset = positivity_set_for(model, opts)
    funcs = initial_condition_functions(cfg, model)
    pad = opts.eps_rho if opts.limiter_mode != "off" else 0.0
    if model.kind in (ModelKind.ADVECTION, ModelKind.BURGERS) and opts.bounds:
        pad = 0.0
    return project_initial_condition(mesh, model, pset, cfg["space"]["degree"],
                                     funcs, pad=pad)


def load_config(path: str | Path) -> dict:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"<root>: not valid JSON ({e})") from None
    return validate_config(raw)


def variable_names(model: FluxModel) -> list[str]:
    return {
        ModelKind.ADVECTION: ["u"],
        ModelKind.BURGERS: ["u"],
        ModelKind.SHALLOW_WATER: ["h", "hu"],
        ModelKind.EULER: ["rho", "mom", "energy"],
    }[model.kind]
