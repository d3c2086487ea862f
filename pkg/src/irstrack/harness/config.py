"""YAML configuration files for the system model and predictor training."""

import dataclasses
import hashlib
import json

import yaml

from ..channel import SystemConfig, db_to_linear, dbm_to_watt
from ..exceptions import ConfigurationError

__all__ = ["config_from_mapping", "load_config", "load_hyper", "config_hash", "config_to_mapping"]

# readable decibel aliases, converted to linear on load
DB_KEYS = {"l0_db": ("l0", db_to_linear), "p_dbm": ("p", dbm_to_watt), "noise_dbm": ("noise_var", dbm_to_watt)}

HYPER_KEYS = {
    "expansion", "n_layers", "input_len", "pred_len", "learning_rate", "batch_size", "max_iter",
    "validation_fraction", "eval_every", "beta1", "beta2", "epsilon", "random_state",
    "n_samples", "strategy",
}


def _read_yaml(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a mapping at the top level")
    return data


def config_from_mapping(data, base=None):
    """Build a :class:`SystemConfig` from a mapping of field names.

    Unknown keys raise :class:`ConfigurationError`.  ``base`` supplies the
    values of omitted fields (defaults to the stock config).
    """
    fields = {f.name for f in dataclasses.fields(SystemConfig)}
    kwargs = {}
    for key, value in data.items():
        if key in DB_KEYS:
            name, conv = DB_KEYS[key]
            if name in data:
                raise ConfigurationError(f"both {key!r} and {name!r} given")
            kwargs[name] = float(conv(value))
        elif key in fields:
            kwargs[key] = tuple(value) if isinstance(value, list) else value
        else:
            raise ConfigurationError(f"unknown configuration key {key!r}")
    base = SystemConfig() if base is None else base
    try:
        return base.replace(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path, base=None):
    return config_from_mapping(_read_yaml(path), base)


def load_hyper(path):
    """Predictor hyper-parameters plus ``n_samples``/``strategy``; unknown keys rejected."""
    data = _read_yaml(path)
    unknown = set(data) - HYPER_KEYS
    if unknown:
        raise ConfigurationError(f"unknown hyper-parameter keys {sorted(unknown)}")
    return data


def config_to_mapping(cfg):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(cfg).items()}


def config_hash(cfg):
    """Stable SHA-256 of the configuration values."""
    blob = json.dumps(config_to_mapping(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()
