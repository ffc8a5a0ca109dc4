"""TOML configuration for simulation runs.

Sections and keys (everything except ``[grid]`` and ``[physics]`` is optional)::

    [grid]         d, N, L
    [physics]      kappa_bar, mu_bar, lambda_bar
    [coefficients] mu, lambda, kappa, pressure (series coefficients in a), truncation, active
    [time]         dt, t_end, output_interval, dt_min, cfl, mode, c0
    [initial]      kind, amplitude, gamma, xi_c, band, velocity, mode
    [diagnostics]  p, k0, radius
    [run]          seed

Unknown sections or keys are rejected, and every validation error names the
offending key.
"""

from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import fields

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .bony_calculus import PowerSeries
from .linear_lab import LinearParams
from .littlewood_paley import validate_theorem_exponent
from .nsk_solver import CoefficientModel, DiagnosticSpec, InitialData, SimConfig
from .spectral_core import Grid


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the dotted key."""


SCHEMA = {
    "grid": {"d": int, "N": int, "L": float},
    "physics": {"kappa_bar": float, "mu_bar": float, "lambda_bar": float},
    "coefficients": {"mu": list, "lambda": list, "kappa": list, "pressure": list, "truncation": int, "active": bool},
    "time": {
        "dt": float,
        "t_end": float,
        "output_interval": float,
        "dt_min": float,
        "cfl": float,
        "mode": str,
        "c0": float,
    },
    "initial": {
        "kind": str,
        "amplitude": float,
        "gamma": float,
        "xi_c": float,
        "band": list,
        "velocity": bool,
        "mode": list,
    },
    "diagnostics": {"p": float, "k0": int, "radius": bool},
    "run": {"seed": int},
}
REQUIRED = {"grid": ("d", "N"), "physics": ("kappa_bar",)}


def _typed(key, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}")
    return value


def _check_keys(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a table")
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{section}: unknown section (allowed: {', '.join(SCHEMA)})")
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a table")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key (allowed: {', '.join(SCHEMA[section])})")
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in raw.get(section, {}):
                raise ConfigError(f"{section}.{key}: required key missing")
    return {s: {k: _typed(f"{s}.{k}", v, SCHEMA[s][k]) for k, v in raw.get(s, {}).items()} for s in SCHEMA}


def _series(key, coeffs):
    try:
        vals = tuple(float(c) for c in coeffs)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: series coefficients must be numbers") from None
    if not vals:
        raise ConfigError(f"{key}: series needs at least one coefficient")
    return PowerSeries(vals)


def _guard(key, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def config_from_dict(raw):
    """Validate a parsed TOML document and build a ``SimConfig``."""
    cfg = _check_keys(raw)
    g = cfg["grid"]
    grid = _guard("grid", Grid, g["d"], g["N"], g.get("L", 2.0 * math.pi))

    ph = cfg["physics"]
    if not ph["kappa_bar"] > 0:
        raise ConfigError(f"physics.kappa_bar: capillarity must be positive, got {ph['kappa_bar']}")
    params = _guard("physics", LinearParams, ph["kappa_bar"], ph.get("mu_bar", 0.5), ph.get("lambda_bar"))

    co = cfg["coefficients"]
    model_kw = {}
    for key, name in (("mu", "mu"), ("lambda", "lam"), ("kappa", "kappa"), ("pressure", "pressure")):
        if key in co:
            model_kw[name] = _series(f"coefficients.{key}", co[key])
    for key in ("truncation", "active"):
        if key in co:
            model_kw[key] = co[key]
    model = _guard("coefficients", CoefficientModel, **model_kw)

    di = cfg["diagnostics"]
    if "p" in di:
        _guard("diagnostics.p", validate_theorem_exponent, di["p"], grid.d)
    diagnostics = _guard("diagnostics", DiagnosticSpec, **di)

    ini = dict(cfg["initial"])
    for key in ("band", "mode"):
        if key in ini:
            ini[key] = tuple(ini[key])
    if ini.get("kind", "random") not in ("random", "band", "mode"):
        raise ConfigError(f"initial.kind: expected random, band or mode, got {ini['kind']!r}")
    if "amplitude" in ini and not ini["amplitude"] >= 0:
        raise ConfigError(f"initial.amplitude: must be nonnegative, got {ini['amplitude']}")
    initial = InitialData(**ini)

    tm = cfg["time"]
    seed = cfg["run"].get("seed", 0)
    for key in ("dt", "t_end"):
        if key in tm and not tm[key] > 0:
            raise ConfigError(f"time.{key}: must be positive, got {tm[key]}")
    return _guard(
        "time",
        SimConfig,
        grid=grid,
        params=params,
        model=model,
        initial=initial,
        diagnostics=diagnostics,
        seed=seed,
        keep_states=False,
        **tm,
    )


def parse_config(path):
    """Read and validate a TOML file."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: malformed TOML: {exc}") from None
    return config_from_dict(raw)


def config_to_dict(config):
    """Inverse of ``config_from_dict``: every field written out explicitly."""
    m = config.model
    ini = {}
    for f in fields(InitialData):
        v = getattr(config.initial, f.name)
        if v is not None:
            ini[f.name] = list(v) if isinstance(v, tuple) else v
    tm = {
        "dt": config.dt,
        "t_end": config.t_end,
        "dt_min": config.dt_min,
        "cfl": config.cfl,
        "mode": config.mode,
    }
    if config.output_interval is not None:
        tm["output_interval"] = config.output_interval
    if config.c0 is not None:
        tm["c0"] = config.c0
    return {
        "grid": {"d": config.grid.d, "N": config.grid.N, "L": config.grid.L},
        "physics": {
            "kappa_bar": config.params.kappa_bar,
            "mu_bar": config.params.mu_bar,
            "lambda_bar": config.params.lambda_bar,
        },
        "coefficients": {
            "mu": list(m.mu.coeffs),
            "lambda": list(m.lam.coeffs),
            "kappa": list(m.kappa.coeffs),
            "pressure": list(m.pressure.coeffs),
            "truncation": m.truncation,
            "active": m.active,
        },
        "time": tm,
        "initial": ini,
        "diagnostics": {"p": config.diagnostics.p, "k0": config.diagnostics.k0, "radius": config.diagnostics.radius},
        "run": {"seed": config.seed},
    }


def dump_config(config):
    return tomli_w.dumps(config_to_dict(config))


def config_hash(config):
    return hashlib.sha256(dump_config(config).encode()).hexdigest()
