"""Flat `key = value` config files for training runs.

One option per line, UTF-8, # comments. Keys are exactly the TrainConfig
field names; anything else is an error so typos fail loudly instead of
silently training with defaults.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .training.config import TrainConfig


class ConfigError(ValueError):
    pass


_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
_BOOLS = {"true": True, "false": False}


def _coerce(key: str, raw: str):
    kind = _FIELDS[key]
    if kind == "bool":
        if raw.lower() not in _BOOLS:
            raise ConfigError(f"{key}: expected true or false, got {raw!r}")
        return _BOOLS[raw.lower()]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    raise ConfigError(f"unhandled field type {kind} for {key}")


def parse_config_text(text: str) -> dict:
    """Returns typed values keyed by TrainConfig field name."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown option {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate option {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config_file(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def write_config_file(cfg: TrainConfig, path: str | Path) -> None:
    lines = []
    for field in dataclasses.fields(TrainConfig):
        value = getattr(cfg, field.name)
        text = {True: "true", False: "false"}.get(value, value) if field.type == "bool" else value
        lines.append(f"{field.name} = {text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def resolve_config(
    file_values: dict | None = None,
    env_seed: str | None = None,
    overrides: dict | None = None,
) -> TrainConfig:
    """Precedence: explicit override, then environment seed, then file, then default."""
    merged = dict(file_values or {})
    if env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"seed from environment is not an integer: {env_seed!r}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown option {key!r}")
        merged[key] = value
    try:
        return TrainConfig(**merged)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from None
