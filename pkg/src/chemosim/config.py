"""Scenario config files: JSON documents naming presets plus numeric overrides.

A config carries the problem dimension, agent count, horizon, preset names
(or inline constant coefficients), the initial state arrays and optional
solver settings.  `config_digest` hashes the canonicalized document, so the
digest is stable under key reordering.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


class ConfigError(ValueError):
    """Raised for unreadable or structurally invalid config files."""


REQUIRED_KEYS = ("dimension", "horizon", "X0", "V0")


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {p} must contain a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in cfg]
    if missing:
        raise ConfigError(f"config {p} is missing required keys: {', '.join(missing)}")
    return cfg


def config_digest(cfg: dict) -> str:
    """sha256 of the canonical (sorted-keys, tight separators) JSON encoding."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
