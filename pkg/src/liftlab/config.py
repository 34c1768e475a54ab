"""Configuration loading, schema validation, and object construction.

One JSON document drives every subcommand; unknown keys and type errors are
all reported at once so a bad config fails with the full list of offenders.
"""

from __future__ import annotations

import copy
import json
import os

import jsonschema

from .errors import ConfigError
from .flowshape import FlowClassParams, FlowShapePair, named_profile, \
    poiseuille_exact, couette_exact
from .geometry import BodyClass, Rect, TrapeziumParams
from .ns_solver import SolverConfig
from .stability import GammaConfig, ProbeConfig, ShapeOptConfig, ZeroLiftConfig

DEFAULT_CONFIG = {
    "geometry": {
        "L": 5.0,
        "H": 1.0,
        "D": {"L": 2.0, "H": 0.5},
        "body": "trapezium",    # or "none" for the empty channel
        "trapezium": {"l": 0.6, "h": 0.15, "gamma": 0.3},
        "alpha": None,          # defaults to the trapezium family area
        "area_tol": 1e-9,
    },
    "flow": {
        "r": 6.0,
        "U": 0,
        "nodes": 129,
        "profile": "poiseuille",
        "odd_amplitude": 0.0,   # adds amplitude*sin(2 pi x / H) to both profiles
        "flux_tol": 1e-9,
    },
    "mesh": {
        "h": 0.16666666666666666,
        "min_angle": 20.0,
        "symmetric": False,
    },
    "solver": {
        "newton_tol": 1e-10,
        "max_newton_iters": 30,
        "continuation_steps": 1,
        "max_continuation_rounds": 6,
        "convection": "standard",
        "pivot_tol": 1.0,
    },
    "lift": {
        "lambda": 0.5,
        "lambda_max": 0.5,
        "samples": 9,
    },
    "zero_lift": {
        "path": "diagonal",
        "lift_tol": None,
        "noise_floor": None,
        "max_solves": 25,
    },
    "gamma": {
        "m_even": 6,
        "m_odd": 6,
        "lambda_coarse": 17,
        "lambda_refine": 8,
        "refine_passes": 2,
        "nm_maxfev": 40,
        "nm_restarts": 1,
        "probe_modes": 2,
        "seed": 0,
    },
    "optimize": {
        "n_vertices": 5,
        "population": 4,
        "generations": 3,
        "sigma0": 0.15,
        "seed": 0,
    },
    "run": {
        "store": "runs.jsonl",
        "outdir": ".",
        "threads": None,
    },
}

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 0}
_NULL_NUM = {"type": ["number", "null"]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "L": _POS, "H": _POS,
                "D": {"type": "object", "additionalProperties": False,
                      "properties": {"L": _POS, "H": _POS}},
                "trapezium": {"type": "object", "additionalProperties": False,
                              "properties": {"l": _POS, "h": _POS,
                                             "gamma": _POS}},
                "alpha": _NULL_NUM,
                "area_tol": _POS,
            },
        },
        "flow": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "r": _POS, "U": {"type": "integer", "enum": [0, 1]},
                "nodes": {"type": "integer", "minimum": 33},
                "profile": {"type": "string",
                            "enum": ["poiseuille", "couette", "plateau"]},
                "odd_amplitude": _NUM,
                "flux_tol": _POS,
            },
        },
        "mesh": {
            "type": "object", "additionalProperties": False,
            "properties": {"h": _POS, "min_angle": _POS,
                           "symmetric": {"type": "boolean"}},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "newton_tol": _POS, "max_newton_iters": _INT,
                "continuation_steps": _INT, "max_continuation_rounds": _INT,
                "convection": {"type": "string", "enum": ["standard", "skew"]},
                "pivot_tol": _NUM,
            },
        },
        "lift": {
            "type": "object", "additionalProperties": False,
            "properties": {"lambda": _NUM, "lambda_max": _NUM,
                           "samples": {"type": "integer", "minimum": 1}},
        },
        "zero_lift": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "path": {"type": "string",
                         "enum": ["diagonal", "body-only", "flow-only"]},
                "lift_tol": _NULL_NUM, "noise_floor": _NULL_NUM,
                "max_solves": _INT,
            },
        },
        "gamma": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "m_even": {"type": "integer", "minimum": 1},
                "m_odd": _INT, "lambda_coarse": {"type": "integer", "minimum": 2},
                "lambda_refine": _INT, "refine_passes": _INT,
                "nm_maxfev": _INT, "nm_restarts": _INT, "probe_modes": _INT,
                "seed": _INT,
            },
        },
        "optimize": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "n_vertices": {"type": "integer", "minimum": 3},
                "population": _INT, "generations": _INT, "sigma0": _POS,
                "seed": _INT,
            },
        },
        "run": {
            "type": "object", "additionalProperties": False,
            "properties": {"store": {"type": "string"},
                           "outdir": {"type": "string"},
                           "threads": {"type": ["integer", "null"]}},
        },
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate_config(cfg: dict) -> list:
    """All schema violations as 'path: message' strings."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(e.path)):
        path = ".".join(str(p) for p in err.path) or "<root>"
        errors.append(f"{path}: {err.message}")
    return errors


def load_config(path: str | None = None, overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        cfg = _deep_merge(cfg, user)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(errors))
    return cfg


def resolved_store_path(cfg: dict) -> str:
    return os.environ.get("LIFTLAB_STORE", cfg["run"]["store"])


# -- object builders ------------------------------------------------------

def build_rect(cfg: dict) -> Rect:
    g = cfg["geometry"]
    return Rect(g["L"], g["H"])


def build_confinement(cfg: dict) -> Rect:
    g = cfg["geometry"]
    return Rect(g["D"]["L"], g["D"]["H"])


def build_trapezium(cfg: dict) -> TrapeziumParams:
    t = cfg["geometry"]["trapezium"]
    return TrapeziumParams(l=t["l"], h=t["h"], gamma=t["gamma"])


def build_body_class(cfg: dict) -> BodyClass:
    g = cfg["geometry"]
    alpha = g["alpha"] if g["alpha"] is not None \
        else build_trapezium(cfg).family_area
    return BodyClass(D=build_confinement(cfg), alpha=alpha,
                     area_tol=g["area_tol"])


def build_flow_class(cfg: dict) -> FlowClassParams:
    f = cfg["flow"]
    return FlowClassParams(r=f["r"], U=f["U"], flux_tol=f["flux_tol"],
                           H=cfg["geometry"]["H"], num_nodes=f["nodes"])


def build_pair(cfg: dict) -> FlowShapePair:
    import numpy as np
    from .flowshape import FlowProfile, symmetric_grid
    f = cfg["flow"]
    H = cfg["geometry"]["H"]
    prof = named_profile(f["profile"], H, f["nodes"])
    amp = f["odd_amplitude"]
    if amp:
        x = symmetric_grid(H, f["nodes"])
        prof = FlowProfile(H, prof.values + amp * np.sin(2.0 * np.pi * x / H))
    return FlowShapePair(prof, prof, f["U"])


def build_solver_config(cfg: dict) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(newton_tol=s["newton_tol"],
                        max_newton_iters=s["max_newton_iters"],
                        continuation_steps=s["continuation_steps"],
                        max_continuation_rounds=s["max_continuation_rounds"],
                        convection=s["convection"], pivot_tol=s["pivot_tol"])


def build_zero_lift_config(cfg: dict) -> ZeroLiftConfig:
    z = cfg["zero_lift"]
    return ZeroLiftConfig(R=build_rect(cfg), flow_class=build_flow_class(cfg),
                          h=cfg["mesh"]["h"], solver=build_solver_config(cfg),
                          lift_tol=z["lift_tol"], noise_floor=z["noise_floor"],
                          max_solves=z["max_solves"],
                          min_angle=cfg["mesh"]["min_angle"],
                          symmetric_mesh=cfg["mesh"]["symmetric"])


def build_gamma_config(cfg: dict) -> GammaConfig:
    g = cfg["gamma"]
    return GammaConfig(R=build_rect(cfg), h=cfg["mesh"]["h"],
                       solver=build_solver_config(cfg),
                       m_even=g["m_even"], m_odd=g["m_odd"],
                       lambda_coarse=g["lambda_coarse"],
                       lambda_refine=g["lambda_refine"],
                       refine_passes=g["refine_passes"],
                       nm_maxfev=g["nm_maxfev"], nm_restarts=g["nm_restarts"],
                       probe_modes=g["probe_modes"], seed=g["seed"],
                       min_angle=cfg["mesh"]["min_angle"])


def build_shape_opt_config(cfg: dict) -> ShapeOptConfig:
    o = cfg["optimize"]
    return ShapeOptConfig(gamma=build_gamma_config(cfg),
                          n_vertices=o["n_vertices"],
                          population=o["population"],
                          generations=o["generations"],
                          sigma0=o["sigma0"], seed=o["seed"])
