"""Experiment description parsed from a flat YAML key/value file.

Every key is optional; an empty file yields the full-scale defaults. Keys map
one-to-one onto :class:`NetworkConfig`, :class:`TrainConfig` or the
experiment-level fields below. Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..radio.config import LAYOUTS, NetworkConfig
from ..training import TrainConfig

ALGORITHMS = ("ppo", "dqn", "ed", "adaptive-ed", "pf")


class ConfigError(ValueError):
    pass


class ConfigFileNotFound(ConfigError):
    pass


class ConfigSchemaError(ConfigError):
    pass


class ConfigRangeError(ConfigError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str = "ppo"
    net: NetworkConfig = field(default_factory=NetworkConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval_configs: int = 15
    eval_realizations: int = 20
    ed_threshold_dbm: float = -72.0
    sweep_high_dbm: float = -22.0
    sweep_low_dbm: float = -92.0
    sweep_step_db: float = 5.0
    seed: int = 0
    out_dir: str = "runs/default"

    def with_overrides(self, **kw) -> ExperimentSpec:
        return dataclasses.replace(self, **kw)


_EXPERIMENT_KEYS = {
    f.name: f.type for f in dataclasses.fields(ExperimentSpec) if f.name not in ("net", "train")
}
_NET_KEYS = {f.name: f.default for f in dataclasses.fields(NetworkConfig)}
_TRAIN_KEYS = {f.name: f.default for f in dataclasses.fields(TrainConfig)}
_EXP_DEFAULTS = {k: getattr(ExperimentSpec(), k) for k in _EXPERIMENT_KEYS}


def _coerce(key: str, value, default):
    kind = type(default)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigSchemaError(f"{key}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigSchemaError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigSchemaError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigSchemaError(f"{key}: expected a string, got {value!r}")
    return value


def spec_from_mapping(data: dict | None) -> ExperimentSpec:
    data = dict(data or {})
    if "layout" in data:
        name = data.pop("layout")
        if name not in LAYOUTS:
            raise ConfigRangeError(f"layout: unknown layout {name!r} (known: {', '.join(sorted(LAYOUTS))})")
        for k, v in LAYOUTS[name].items():
            data.setdefault(k, v)
    unknown = sorted(set(data) - set(_NET_KEYS) - set(_TRAIN_KEYS) - set(_EXPERIMENT_KEYS))
    if unknown:
        raise ConfigSchemaError(f"unknown config keys: {', '.join(unknown)}")
    net_kw, train_kw, exp_kw = {}, {}, {}
    for key, value in data.items():
        if key in _NET_KEYS:
            net_kw[key] = _coerce(key, value, _NET_KEYS[key])
        elif key in _TRAIN_KEYS:
            train_kw[key] = _coerce(key, value, _TRAIN_KEYS[key])
        else:
            exp_kw[key] = _coerce(key, value, _EXP_DEFAULTS[key])
    try:
        net = NetworkConfig(**net_kw)
        train = TrainConfig(**train_kw)
    except ValueError as exc:
        raise ConfigRangeError(str(exc)) from None
    spec = ExperimentSpec(net=net, train=train, **exp_kw)
    if spec.algorithm not in ALGORITHMS:
        raise ConfigRangeError(f"algorithm must be one of {', '.join(ALGORITHMS)}, got {spec.algorithm!r}")
    if spec.eval_configs < 1 or spec.eval_realizations < 1:
        raise ConfigRangeError("eval_configs and eval_realizations must be >= 1")
    if spec.sweep_step_db <= 0 or spec.sweep_high_dbm < spec.sweep_low_dbm:
        raise ConfigRangeError("ED sweep needs sweep_step_db > 0 and sweep_high_dbm >= sweep_low_dbm")
    if spec.seed < 0:
        raise ConfigRangeError("seed must be non-negative")
    return spec


def read_mapping(path) -> dict:
    """The raw key/value mapping of a config file (empty file -> empty mapping)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigFileNotFound(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigSchemaError(f"{path}: not valid YAML ({exc})") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigSchemaError(f"{path}: expected a flat key/value mapping")
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise ConfigSchemaError(f"{key}: nested values are not allowed")
    return data


def parse_config(path) -> ExperimentSpec:
    return spec_from_mapping(read_mapping(path))
