"""Experiment configuration: flat key=value files, flag overrides, seed trees."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

SUBCOMMANDS = ("tomography", "rmt", "otoc", "echo", "krylov", "sweep")
OBSERVABLES = ("Jz", "Jx", "Jy", "random-hermitian")
ENSEMBLES = ("GOE", "GUE", "GSE", "CUE", "COE")

__all__ = ["ExperimentConfig", "load_config", "derive_seed",
           "SUBCOMMANDS", "OBSERVABLES", "ENSEMBLES"]


@dataclass
class ExperimentConfig:
    """Resolved parameters for one batch run.  The seed is mandatory."""

    subcommand: str
    seed: int
    j: float = 10.0
    lambdas: tuple = (7.0,)
    alpha: float = 1.4
    n_steps: int = 100
    noise_spread: float = 0.01
    epsilon: float | None = None
    n_states: int = 10
    observable: str = "Jz"
    ensemble: str = "COE"
    output_dir: str = "out"

    def validate(self) -> "ExperimentConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        two_j = round(2 * float(self.j))
        if not np.isfinite(self.j) or abs(2 * self.j - two_j) > 1e-9 or two_j < 1:
            raise ConfigError(f"j must be a positive half-integer, got {self.j}")
        if not self.lambdas:
            raise ConfigError("lambda list must be nonempty")
        if not all(np.isfinite(v) for v in self.lambdas):
            raise ConfigError("lambda values must be finite")
        for name in ("alpha", "noise_spread"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.noise_spread < 0:
            raise ConfigError("noise must be nonnegative")
        if self.epsilon is not None and (not np.isfinite(self.epsilon) or self.epsilon < 0):
            raise ConfigError("epsilon must be finite and nonnegative")
        if self.n_steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.n_states < 1:
            raise ConfigError("states must be >= 1")
        if self.observable not in OBSERVABLES:
            raise ConfigError(f"unknown observable {self.observable!r}; choose from {OBSERVABLES}")
        if self.ensemble not in ENSEMBLES:
            raise ConfigError(f"unknown ensemble {self.ensemble!r}; choose from {ENSEMBLES}")
        return self

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


def _parse_lambda(value) -> tuple:
    if isinstance(value, (tuple, list)):
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float)):
        return (float(value),)
    try:
        return tuple(float(part) for part in str(value).split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse lambda list from {value!r}") from exc


def _parse_epsilon(value):
    if value is None:
        return None
    text = str(value).strip().lower()
    if text in ("none", "relative", ""):
        return None
    return float(value)


# config-file/flag key -> (ExperimentConfig field, converter)
_KEY_MAP = {
    "j": ("j", float),
    "lambda": ("lambdas", _parse_lambda),
    "alpha": ("alpha", float),
    "steps": ("n_steps", int),
    "noise": ("noise_spread", float),
    "epsilon": ("epsilon", _parse_epsilon),
    "seed": ("seed", int),
    "states": ("n_states", int),
    "observable": ("observable", str),
    "ensemble": ("ensemble", str),
    "out": ("output_dir", str),
}


def _parse_file(path) -> dict:
    values = {}
    lines = Path(path).read_text().splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_MAP:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path=None, overrides=None, subcommand=None) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a file and/or flag overrides.

    `overrides` uses the flag key names (j, lambda, steps, noise, ...) and
    wins over file values.  Unknown keys are rejected by name; a missing seed
    is an error.
    """
    merged = _parse_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if key not in _KEY_MAP:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            merged[key] = value
    if subcommand is None:
        raise ConfigError("a subcommand is required")
    if "seed" not in merged:
        raise ConfigError("seed is required (pass --seed or set seed= in the config file)")
    kwargs = {}
    for key, value in merged.items():
        field_name, convert = _KEY_MAP[key]
        try:
            kwargs[field_name] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return ExperimentConfig(subcommand=subcommand, **kwargs).validate()


def derive_seed(master: int, task_index: int) -> int:
    """Collision-resistant per-task seed: counter-mode hash of master || index."""
    payload = struct.pack("<QQ", int(master) % 2**64, int(task_index) % 2**64)
    digest = hashlib.sha256(b"tomochaos.seed.v1" + payload).digest()
    return int.from_bytes(digest[:8], "little")
