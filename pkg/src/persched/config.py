"""Experiment configuration files.

One YAML file describes an experiment: the plant (either a lattice
geometry or explicit matrices, inline or in referenced whitespace text
files), the solver settings, and optional sweep and comparison sections.
Everything is resolved and validated up front, so a bad reference fails
before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .admm import AdmmConfig
from .exceptions import ConfigError, InputError
from .model import FieldGeometry, SystemModel, build_diffusion_system
from .periodic import Schedule

__all__ = ["ExperimentConfig", "load_experiment"]

_KINDS = ("run", "sweep", "compare", "validate", "oracle", "baseline")

_TOP_KEYS = {"kind", "system", "admm", "sweep", "compare", "seed", "output"}
_SYSTEM_KEYS = {"field", "matrices"}
_FIELD_KEYS = {
    "ell_h",
    "ell_v",
    "spacing",
    "sample_interval",
    "sensor_sites",
    "q_scale",
    "r_scale",
}
_MATRIX_KEYS = {"A", "B", "C", "Q", "R"}
_ADMM_KEYS = {
    "period",
    "gamma",
    "eta",
    "rho",
    "eps",
    "max_iters",
    "inner_max_iters",
    "inner_tol_cap",
    "armijo_alpha",
    "armijo_beta",
    "zero_tol",
    "init_schedule",
}
_SWEEP_KEYS = {"gammas", "etas"}
_COMPARE_KEYS = {"trials", "oracle", "total_activations", "budget"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment: plant, solver settings, and extras."""

    system: SystemModel
    admm: Optional[AdmmConfig]
    kind: Optional[str]
    seed: int
    output: Optional[str]
    sweep_gammas: Optional[tuple]
    sweep_etas: Optional[tuple]
    compare_trials: int
    compare_oracle: bool
    compare_total_activations: Optional[int]
    compare_budget: int


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def _load_matrix(value, base: Path, where: str) -> np.ndarray:
    if isinstance(value, str):
        path = (base / value).resolve()
        if not path.is_file():
            raise ConfigError(f"{where}: referenced file {path} does not exist")
        try:
            return np.loadtxt(path, ndmin=2)
        except ValueError as exc:
            raise ConfigError(f"{where}: could not parse {path}: {exc}") from exc
    if isinstance(value, list):
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: not a numeric array: {exc}") from exc
        if arr.ndim != 2:
            raise ConfigError(f"{where}: expected a 2-D array, got ndim={arr.ndim}")
        return arr
    raise ConfigError(f"{where} must be a nested array or a file path string")


def _build_system(section: dict, base: Path) -> SystemModel:
    section = _require_mapping(section, "system")
    _check_keys(section, _SYSTEM_KEYS, "system")
    sources = [k for k in ("field", "matrices") if k in section]
    if len(sources) != 1:
        raise ConfigError("system needs exactly one of 'field' or 'matrices'")

    if sources[0] == "field":
        f = _require_mapping(section["field"], "system.field")
        _check_keys(f, _FIELD_KEYS, "system.field")
        for key in ("ell_h", "ell_v", "sensor_sites"):
            if key not in f:
                raise ConfigError(f"system.field.{key} is required")
        sites = f["sensor_sites"]
        if not isinstance(sites, list) or not all(
            isinstance(s, list) and len(s) == 2 for s in sites
        ):
            raise ConfigError("system.field.sensor_sites must be a list of [i, j] pairs")
        geom = FieldGeometry(
            ell_h=int(f["ell_h"]),
            ell_v=int(f["ell_v"]),
            spacing=float(f.get("spacing", 1.0)),
            sample_interval=float(f.get("sample_interval", 0.5)),
            sensor_sites=tuple((int(i), int(j)) for i, j in sites),
        )
        return build_diffusion_system(
            geom, q_scale=float(f.get("q_scale", 1.0)), r_scale=float(f.get("r_scale", 1.0))
        )

    m = _require_mapping(section["matrices"], "system.matrices")
    _check_keys(m, _MATRIX_KEYS, "system.matrices")
    missing = sorted(_MATRIX_KEYS - set(m))
    if missing:
        raise ConfigError(f"system.matrices.{missing[0]} is required")
    mats = {k: _load_matrix(m[k], base, f"system.matrices.{k}") for k in _MATRIX_KEYS}
    return SystemModel(A=mats["A"], B=mats["B"], C=mats["C"], Q=mats["Q"], R=mats["R"])


def _load_init_schedule(value, base: Path) -> Schedule:
    if isinstance(value, str):
        path = (base / value).resolve()
        if not path.is_file():
            raise ConfigError(f"admm.init_schedule: referenced file {path} does not exist")
        return Schedule.from_text(path.read_text())
    if isinstance(value, list):
        return Schedule(np.asarray(value))
    raise ConfigError("admm.init_schedule must be a 0/1 grid or a file path string")


def _build_admm(section: dict, base: Path) -> AdmmConfig:
    section = _require_mapping(section, "admm")
    _check_keys(section, _ADMM_KEYS, "admm")
    for key in ("period", "gamma", "eta"):
        if key not in section:
            raise ConfigError(f"admm.{key} is required")
    kwargs = {
        "period": int(section["period"]),
        "gamma": float(section["gamma"]),
        "eta": section["eta"]
        if np.isscalar(section["eta"])
        else tuple(int(e) for e in section["eta"]),
    }
    for key, cast in (
        ("rho", float),
        ("eps", float),
        ("max_iters", int),
        ("inner_max_iters", int),
        ("inner_tol_cap", float),
        ("armijo_alpha", float),
        ("armijo_beta", float),
    ):
        if key in section:
            kwargs[key] = cast(section[key])
    if section.get("zero_tol") is not None:
        kwargs["zero_tol"] = float(section["zero_tol"])
    if section.get("init_schedule") is not None:
        kwargs["init_schedule"] = _load_init_schedule(section["init_schedule"], base)
    return AdmmConfig(**kwargs)


def load_experiment(path) -> ExperimentConfig:
    """Parse and fully resolve one experiment file.

    Raises ConfigError with the offending field on any structural problem,
    including missing referenced files.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    raw = _require_mapping(raw, "config")
    _check_keys(raw, _TOP_KEYS, "config")
    base = path.parent

    kind = raw.get("kind")
    if kind is not None and kind not in _KINDS:
        raise ConfigError(f"kind must be one of {', '.join(_KINDS)}; got {kind!r}")

    if "system" not in raw:
        raise ConfigError("system section is required")
    system = _build_system(raw["system"], base)

    admm = None
    if "admm" in raw:
        admm = _build_admm(raw["admm"], base)
        try:
            admm.eta_tuple(system.n_sensors)
        except InputError as exc:
            raise ConfigError(f"admm.eta: {exc}") from exc
        if (
            admm.init_schedule is not None
            and admm.init_schedule.n_sensors != system.n_sensors
        ):
            raise ConfigError(
                f"admm.init_schedule has {admm.init_schedule.n_sensors} sensor columns, "
                f"system has {system.n_sensors}"
            )

    sweep_gammas = None
    sweep_etas = None
    if "sweep" in raw:
        s = _require_mapping(raw["sweep"], "sweep")
        _check_keys(s, _SWEEP_KEYS, "sweep")
        if "gammas" in s:
            if not isinstance(s["gammas"], list) or not s["gammas"]:
                raise ConfigError("sweep.gammas must be a non-empty list")
            sweep_gammas = tuple(float(g) for g in s["gammas"])
        if "etas" in s:
            if not isinstance(s["etas"], list) or not s["etas"]:
                raise ConfigError("sweep.etas must be a non-empty list")
            sweep_etas = tuple(
                e if np.isscalar(e) else tuple(int(x) for x in e) for e in s["etas"]
            )

    compare_trials = 500
    compare_oracle = False
    compare_total = None
    compare_budget = 1_000_000
    if "compare" in raw:
        c = _require_mapping(raw["compare"], "compare")
        _check_keys(c, _COMPARE_KEYS, "compare")
        compare_trials = int(c.get("trials", compare_trials))
        if compare_trials < 0:
            raise ConfigError("compare.trials must be nonnegative")
        compare_oracle = bool(c.get("oracle", False))
        if c.get("total_activations") is not None:
            compare_total = int(c["total_activations"])
        compare_budget = int(c.get("budget", compare_budget))

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a directory path string")

    return ExperimentConfig(
        system=system,
        admm=admm,
        kind=kind,
        seed=seed,
        output=output,
        sweep_gammas=sweep_gammas,
        sweep_etas=sweep_etas,
        compare_trials=compare_trials,
        compare_oracle=compare_oracle,
        compare_total_activations=compare_total,
        compare_budget=compare_budget,
    )
