"""Run configuration: defaults, a flat ``key = value`` file, and flag overrides."""
from __future__ import annotations

import dataclasses
import datetime as dt
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

__all__ = ["RunConfig", "ConfigError", "read_config_file", "resolve"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    universe: str | None = None
    out: str = "out"
    seed: int = 0
    workers: int = 1
    # selector / backtest
    split_date: dt.date = dt.date(2021, 7, 1)
    short_window: int = 5
    long_window: int = 10
    band_window: int = 20
    band_k: float = 2.0
    boundary: float = 0.5
    grid_step: float = 0.01
    hist_bins: int = 40
    # q-learning
    bins_per_dim: int = 5
    alpha: str = "harmonic"
    gamma: float = 0.0
    update: str = "both"
    epsilon: float = 0.1
    t_threshold: float = 1.96
    n_min: int = 30
    train_start: dt.date | None = None
    train_end: dt.date | None = None
    eval_start: dt.date | None = None
    eval_end: dt.date | None = None
    qtable: str | None = None
    # synthetic universes
    kind: str = "randomwalk"
    count: int = 10
    n: int = 252
    sigma: float = 0.01
    theta: float = 0.3
    mu: float = math.log(100.0)
    phi: float = 0.6
    p0: float = 100.0
    start: dt.date = dt.date(2021, 1, 4)

    def __post_init__(self) -> None:
        checks = [
            (self.workers >= 1, "workers must be >= 1"),
            (1 <= self.short_window < self.long_window, "need 1 <= short_window < long_window"),
            (self.band_window >= 2, "band_window must be >= 2"),
            (self.band_k >= 0, "band_k must be >= 0"),
            (0 <= self.boundary <= 1, "boundary must lie in [0, 1]"),
            (0 < self.grid_step <= 1, "grid_step must lie in (0, 1]"),
            (self.hist_bins >= 1, "hist_bins must be >= 1"),
            (self.bins_per_dim >= 1, "bins_per_dim must be >= 1"),
            (0 <= self.gamma < 1, "gamma must lie in [0, 1)"),
            (self.update in ("both", "epsilon_greedy"), "update must be 'both' or 'epsilon_greedy'"),
            (0 <= self.epsilon <= 1, "epsilon must lie in [0, 1]"),
            (self.n_min >= 0, "n_min must be >= 0"),
            (self.kind in ("randomwalk", "ou", "persistent"), "kind must be randomwalk, ou or persistent"),
            (self.count >= 1, "count must be >= 1"),
            (self.n >= 1, "n must be >= 1"),
            (self.sigma >= 0, "sigma must be >= 0"),
            (0 < self.theta < 1, "theta must lie in (0, 1)"),
            (0 <= self.phi < 1, "phi must lie in [0, 1)"),
            (self.p0 > 0, "p0 must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        if self.alpha != "harmonic":
            try:
                a = float(self.alpha)
            except ValueError:
                raise ConfigError("alpha must be 'harmonic' or a number in (0, 1]") from None
            if not 0 < a <= 1:
                raise ConfigError("alpha must lie in (0, 1]")
        for lo, hi in (("train_start", "train_end"), ("eval_start", "eval_end")):
            a, b = getattr(self, lo), getattr(self, hi)
            if a is not None and b is not None and b < a:
                raise ConfigError(f"{hi} precedes {lo}")

    @property
    def alpha_value(self) -> float | str:
        return "harmonic" if self.alpha == "harmonic" else float(self.alpha)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.isoformat() if isinstance(v, dt.date) else v
        return out


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: Any) -> Any:
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if "None" in kind and text.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind.startswith("dt.date"):
            return dt.date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return text


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment, keys may use dashes."""
    values: dict[str, Any] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = _coerce(key, value)
    return values


def resolve(file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults, then file values, then overrides (``None`` overrides are ignored)."""
    merged: dict[str, Any] = {}
    for src in (file_values or {}), (overrides or {}):
        for k, v in src.items():
            if v is not None:
                merged[k] = _coerce(k, v)
    return dataclasses.replace(RunConfig(), **merged)
