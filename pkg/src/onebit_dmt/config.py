"""Experiment configuration: flat TOML file plus command-line overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

VARIANTS = frozenset({"printed_alpha", "printed_exmp2", "printed_f_i"})
SCHEDULES = ("printed", "exponent")
POWER_MODES = ("short", "long")


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


def _deadline(v) -> int | None:
    if v is None or (isinstance(v, str) and v.strip().lower() in {"inf", "unbounded", "none"}):
        return None
    if isinstance(v, float) and math.isinf(v):
        return None
    try:
        d = int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"bad deadline {v!r}") from None
    if d != float(v) or d < 1:
        raise ConfigError(f"deadline must be a positive integer or 'inf', got {v!r}")
    return d


def _floats(v, name: str) -> list[float]:
    if isinstance(v, str):
        v = [s for s in v.replace(" ", "").split(",") if s]
    if isinstance(v, (int, float)):
        v = [v]
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of numbers, got {v!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a subcommand needs; ``None`` fields take the subcommand default."""

    M: int = 2
    N: int = 2
    l: int = 8
    deadlines: tuple[int | None, ...] | None = None
    r_grid: tuple[float, ...] | None = None
    r: float = 0.25
    snr_db: tuple[float, ...] = (20.0, 30.0, 40.0, 50.0)
    trials: int = 100_000
    seed: int = 0
    power_mode: str = "short"
    schedule: str = "exponent"
    budget: float = 2.0
    workers: int = 1
    stage_cap: int = 10**6
    variants: frozenset[str] = field(default_factory=frozenset)
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        if self.M < 1 or self.N < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.l < 1:
            raise ConfigError("blocklength must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.power_mode not in POWER_MODES:
            raise ConfigError(f"power_mode must be one of {POWER_MODES}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"schedule must be one of {SCHEDULES}")
        if not self.snr_db or list(self.snr_db) != sorted(self.snr_db):
            raise ConfigError("snr grid must be non-empty and sorted")
        if self.r_grid is not None:
            if not self.r_grid or list(self.r_grid) != sorted(self.r_grid):
                raise ConfigError("r grid must be non-empty and sorted")
            if self.r_grid[0] < 0 or self.r_grid[-1] > min(self.M, self.N):
                raise ConfigError(f"r grid must lie in [0, {min(self.M, self.N)}]")
        if not (0 <= self.r <= min(self.M, self.N)):
            raise ConfigError(f"r must lie in [0, {min(self.M, self.N)}]")
        if self.deadlines is not None and not self.deadlines:
            raise ConfigError("deadline list must be non-empty")
        bad = set(self.variants) - VARIANTS
        if bad:
            raise ConfigError(f"unknown variant flags {sorted(bad)}; known: {sorted(VARIANTS)}")
        if self.budget <= 0 or self.workers < 1 or self.stage_cap < 1:
            raise ConfigError("budget, workers and stage_cap must be positive")
        return self

    def echo(self) -> list[str]:
        """``key = value`` lines describing the run, for CSV comment headers."""
        lines = []
        for f in fields(self):
            if f.name in ("out", "workers"):
                continue
            v = getattr(self, f.name)
            if f.name == "deadlines" and v is not None:
                v = ["inf" if d is None else d for d in v]
            elif f.name == "variants":
                v = sorted(v)
            elif isinstance(v, tuple):
                v = list(v)
            lines.append(f"{f.name} = {v}")
        return lines


_KEYS = {f.name for f in fields(ExperimentConfig)}
_ALIASES = {"D": "deadlines", "snr_db_list": "snr_db", "variant": "variants"}


def coerce(raw: dict) -> dict:
    """Normalize raw key/values from TOML or argparse into dataclass field types."""
    out = {}
    for key, v in raw.items():
        key = _ALIASES.get(key, key)
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if v is None:
            continue
        try:
            if key == "deadlines":
                items = v.split(",") if isinstance(v, str) else (v if isinstance(v, (list, tuple)) else [v])
                v = tuple(_deadline(x) for x in items if str(x).strip())
            elif key in ("r_grid", "snr_db"):
                v = tuple(_floats(v, key))
            elif key == "variants":
                v = frozenset([v] if isinstance(v, str) else v)
            elif key in ("M", "N", "l", "trials", "seed", "workers", "stage_cap"):
                if isinstance(v, float) and v != int(v):
                    raise ConfigError(f"{key} must be an integer")
                v = int(v)
            elif key in ("r", "budget"):
                v = float(v)
            elif key in ("power_mode", "schedule", "out"):
                v = str(v)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {v!r}") from None
        out[key] = v
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        nested = [k for k, v in raw.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"config must be flat; found tables {nested}")
    cfg = replace(ExperimentConfig(), **coerce(raw))
    if overrides:
        cfg = replace(cfg, **coerce(overrides))
    return cfg.validate()
