"""TOML configuration files and their fully-resolved dictionary form.

Grammar (every section and key optional except ``[lattice]`` and
``[model]``)::

    [lattice]      geometry = "chain" | "square"; extent = 8 | [3, 3]
    [model]        J_P, g_P
    [schedule]     g_max, g_min, T, t0, t1, J0, v
    [integrator]   dt, scheme
    [noise]        kind, rate, targets
    [run]          initial_state, max_cycles, quiet_cycles_to_stop,
                   n_trajectories, master_seed, sample_every, workers
    [benchmark]    g_P_low, g_P_high, n_instances, variants, small_J_factor
    [noise_study]  kinds, rate

``t0`` and ``t1`` default to 10% and 90% of ``T``. A run manifest (JSON with a
``"config"`` object) is accepted wherever a config file is.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .evolve import IntegratorConfig
from .hamiltonian import LatticeSpec, ScheduleSet
from .protocol import BenchmarkSettings, NoiseStudySettings, ProtocolConfig
from .qstate import NoiseModel

_FLOAT = "float"
_INT = "int"
_STR = "str"

SCHEMA = {
    "lattice": {"geometry": _STR, "extent": "extent", "boundary": _STR},
    "model": {"J_P": _FLOAT, "g_P": _FLOAT},
    "schedule": {k: _FLOAT for k in ("g_max", "g_min", "T", "t0", "t1", "J0", "v")},
    "integrator": {"dt": _FLOAT, "scheme": _STR, "oracle_substeps": _INT},
    "noise": {"kind": _STR, "rate": _FLOAT, "targets": _STR},
    "run": {
        "initial_state": _STR,
        "max_cycles": _INT,
        "quiet_cycles_to_stop": _INT,
        "n_trajectories": _INT,
        "master_seed": _INT,
        "sample_every": _INT,
        "workers": _INT,
    },
    "benchmark": {
        "g_P_low": _FLOAT,
        "g_P_high": _FLOAT,
        "n_instances": _INT,
        "variants": "strlist",
        "small_J_factor": _FLOAT,
    },
    "noise_study": {"kinds": "strlist", "rate": _FLOAT},
}
REQUIRED = {"lattice": ("geometry", "extent"), "model": ("J_P", "g_P")}


def _coerce(path: str, kind: str, value):
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    if kind == "strlist":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigurationError(f"{path}: expected a list of strings, got {value!r}")
        return tuple(value)
    if kind == "extent":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            return tuple(value)
        raise ConfigurationError(f"{path}: expected an integer or [rows, cols], got {value!r}")
    raise AssertionError(kind)


def _validated_sections(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration must be a table of sections")
    out = {}
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigurationError(f"[{section}] must be a table")
        out[section] = {}
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {section}.{key}")
            out[section][key] = _coerce(f"{section}.{key}", SCHEMA[section][key], value)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in out.get(section, {}):
                raise ConfigurationError(f"missing required key {section}.{key}")
    return out


def _build(section: str, factory, kwargs: dict):
    try:
        return factory(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"[{section}] {exc}") from None


def config_from_dict(raw: dict) -> ProtocolConfig:
    """Validate a section dictionary and materialize every default."""
    d = _validated_sections(raw)
    sched = dict(d.get("schedule", {}))
    T = sched.get("T", ScheduleSet.T)
    sched.setdefault("t0", 0.1 * T)
    sched.setdefault("t1", 0.9 * T)
    run = d.get("run", {})
    try:
        return ProtocolConfig(
            lattice=_build("lattice", LatticeSpec, d["lattice"]),
            J_P=d["model"]["J_P"],
            g_P=d["model"]["g_P"],
            schedules=_build("schedule", ScheduleSet, sched),
            integrator=_build("integrator", IntegratorConfig, d.get("integrator", {})),
            noise=_build("noise", NoiseModel, d.get("noise", {})),
            benchmark=_build("benchmark", BenchmarkSettings, d.get("benchmark", {})),
            noise_study=_build("noise_study", NoiseStudySettings, d.get("noise_study", {})),
            **run,
        )
    except ConfigurationError as exc:
        msg = str(exc)
        if not msg.startswith("["):
            msg = f"[run] {msg}"
        raise ConfigurationError(msg) from None


def parse_config(path) -> ProtocolConfig:
    """Read a TOML config (or a JSON run manifest) into a validated config."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
        raw = raw.get("config", raw) if isinstance(raw, dict) else raw
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid TOML: {exc}") from None
    return config_from_dict(raw)


def config_to_dict(cfg: ProtocolConfig) -> dict:
    """Fully resolved section dictionary; ``config_from_dict`` inverts it."""
    lat = asdict(cfg.lattice)
    if isinstance(lat["extent"], tuple):
        lat["extent"] = list(lat["extent"])
    bench = asdict(cfg.benchmark)
    bench["variants"] = list(bench["variants"])
    ns = asdict(cfg.noise_study)
    ns["kinds"] = list(ns["kinds"])
    run_keys = [f.name for f in fields(ProtocolConfig) if f.name in SCHEMA["run"]]
    return {
        "lattice": lat,
        "model": {"J_P": cfg.J_P, "g_P": cfg.g_P},
        "schedule": asdict(cfg.schedules),
        "integrator": asdict(cfg.integrator),
        "noise": asdict(cfg.noise),
        "run": {k: getattr(cfg, k) for k in run_keys},
        "benchmark": bench,
        "noise_study": ns,
    }
