"""Experiment configuration documents (JSON) and ``key=value`` overrides."""
from __future__ import annotations

import json

from tabnav.agents.state import HyperparamError, Hyperparams
from tabnav.experiments.config import (
    EXPERIMENTS, ConfigError, ExperimentConfig, default_config,
)

# Document key -> Hyperparams field (``lambda`` is a Python keyword).
HP_KEYS = {("lambda" if name == "lam" else name): name for name in Hyperparams.names()}
_INT_FIELDS = {"n_runs", "n_episodes", "max_steps_per_episode", "master_seed", "relearn_episodes",
               "sr_max_steps", "n_place_maps", "n_components", "walk_steps", "hidden_dim",
               "n_permutations"}
_FLOAT_FIELDS = {"adapt_ratio", "sr_tol", "sr_power", "learning_rate", "init_scale"}
_STR_FIELDS = {"experiment", "algorithm", "environment", "policy", "replan"}
_WINDOW_FIELDS = {"pre_window", "post_window"}
_HP_INT = {"k_replay", "vi_max_iters"}


def _check_type(value, path: str, kind: str):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        value = float(value)
    elif kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
    elif kind == "window":
        if (not isinstance(value, list) or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, int) for v in value)):
            raise ConfigError(f"{path}: expected [first, last] episode numbers, got {value!r}")
        value = tuple(value)
    return value


def _field_kind(name: str) -> str | None:
    if name in _INT_FIELDS:
        return "int"
    if name in _FLOAT_FIELDS:
        return "float"
    if name in _STR_FIELDS:
        return "str"
    if name in _WINDOW_FIELDS:
        return "window"
    return None


def config_from_document(doc: dict) -> ExperimentConfig:
    """Defaults for ``doc['experiment']`` overlaid with every key in ``doc``."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be an object")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: expected one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    known = set(ExperimentConfig.field_names())
    unknown = sorted(k for k in doc if k not in known)
    hp_doc = doc.get("hyperparams", {})
    if not isinstance(hp_doc, dict):
        raise ConfigError("hyperparams: expected an object")
    unknown += sorted(f"hyperparams.{k}" for k in hp_doc if k not in HP_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    changes = {}
    for key, value in doc.items():
        if key in ("experiment", "hyperparams"):
            continue
        if key == "edit_episode":
            if value is not None:
                value = _check_type(value, key, "int")
        else:
            value = _check_type(value, key, _field_kind(key))
        changes[key] = value
    base = default_config(experiment)
    hp_changes = {}
    for key, value in hp_doc.items():
        kind = "int" if HP_KEYS[key] in _HP_INT else "float"
        hp_changes[HP_KEYS[key]] = _check_type(value, f"hyperparams.{key}", kind)
    try:
        changes["hyperparams"] = base.hyperparams.replace(**hp_changes)
    except HyperparamError as exc:
        raise ConfigError(f"hyperparams: {exc}") from None
    return default_config(experiment, **changes)


def parse_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_document(doc)


def config_to_document(config: ExperimentConfig) -> dict:
    doc = config.to_dict()
    doc["hyperparams"] = {
        ("lambda" if k == "lam" else k): v for k, v in config.hyperparams.to_dict().items()
    }
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Copy of ``doc`` with ``key=value`` items applied.

    Keys are config fields or ``hyperparams.<name>``; values are read as
    JSON literals and otherwise kept as strings.
    """
    out = json.loads(json.dumps(doc))
    known = set(ExperimentConfig.field_names()) - {"hyperparams"}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        if key.startswith("hyperparams."):
            name = key.split(".", 1)[1]
            if name not in HP_KEYS:
                raise ConfigError(f"override {key!r}: unknown hyperparameter")
            out.setdefault("hyperparams", {})[name] = value
        elif key in known:
            out[key] = value
        else:
            raise ConfigError(f"override {key!r}: unknown config key")
    return out
