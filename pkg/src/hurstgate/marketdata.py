"""Close-only price series, CSV ingestion and seeded synthetic generators.

All synthetic generators draw standard normal deviates from numpy's
``PCG64`` bit generator (64-bit output, seeded with the given integer) via
``Generator.standard_normal`` (ziggurat transform).  Exactly ``n - 1``
deviates are drawn, one per step, so the random walk, Ornstein-Uhlenbeck
and persistent generators consume identical noise for identical seeds.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PriceSeries",
    "ReturnSequence",
    "DataError",
    "load_csv",
    "write_csv",
    "load_universe",
    "split_at",
    "business_days",
    "normals",
    "synth_random_walk",
    "synth_ou",
    "synth_persistent",
    "log_returns",
]

DEFAULT_START = dt.date(2021, 1, 4)


class DataError(ValueError):
    """Raised when price data violates the series invariants."""


@dataclass(frozen=True, eq=False)
class PriceSeries:
    symbol: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self) -> None:
        closes = np.array(self.closes, dtype=float)
        closes.setflags(write=False)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "dates", tuple(self.dates))
        if closes.ndim != 1 or len(closes) == 0:
            raise DataError("empty series")
        if len(self.dates) != len(closes):
            raise DataError("dates and closes differ in length")
        if not np.all(np.isfinite(closes)):
            raise DataError("non-finite price")
        if np.any(closes <= 0):
            raise DataError("non-positive price")
        for a, b in zip(self.dates, self.dates[1:]):
            if not b > a:
                raise DataError(f"non-increasing dates at {b.isoformat()}")

    def __len__(self) -> int:
        return len(self.closes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return (
            self.symbol == other.symbol
            and self.dates == other.dates
            and np.array_equal(self.closes, other.closes)
        )

    __hash__ = None  # type: ignore[assignment]

    def scaled(self, factor: float) -> "PriceSeries":
        return PriceSeries(self.symbol, self.dates, self.closes * factor)

    def slice(self, start: int, stop: int | None = None) -> "PriceSeries":
        return PriceSeries(self.symbol, self.dates[start:stop], self.closes[start:stop])

    def between(self, first: dt.date | None, last: dt.date | None) -> "PriceSeries":
        """Observations with ``first <= date <= last`` (either bound optional)."""
        idx = [
            i
            for i, d in enumerate(self.dates)
            if (first is None or d >= first) and (last is None or d <= last)
        ]
        if not idx:
            raise DataError(f"{self.symbol}: no observations in range")
        return self.slice(idx[0], idx[-1] + 1)


@dataclass(frozen=True, eq=False)
class ReturnSequence:
    values: np.ndarray
    kind: str = "simple"  # "simple" or "log"

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite return")
        if self.kind not in ("simple", "log"):
            raise ValueError(f"unknown return kind {self.kind!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())


def load_csv(path: str | os.PathLike) -> PriceSeries:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path.name}: empty file")
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise DataError(f"{path.name}: expected header 'date,close', got {header!r}")
        dates: list[dt.date] = []
        closes: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path.name}:{lineno}: malformed row {row!r}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataError(f"{path.name}:{lineno}: bad date {row[0]!r}") from None
            try:
                close = float(row[1])
            except ValueError:
                raise DataError(f"{path.name}:{lineno}: non-numeric price {row[1]!r}") from None
            if not math.isfinite(close):
                raise DataError(f"{path.name}:{lineno}: non-finite price")
            if close <= 0:
                raise DataError(f"{path.name}:{lineno}: non-positive price {close!r}")
            if dates and day <= dates[-1]:
                raise DataError(f"{path.name}:{lineno}: non-increasing dates")
            dates.append(day)
            closes.append(close)
    if not dates:
        raise DataError(f"{path.name}: empty file")
    return PriceSeries(path.stem, tuple(dates), np.array(closes))


def write_csv(series: PriceSeries, path: str | os.PathLike) -> Path:
    """Write ``series`` atomically; closes use ``repr`` so reloading is exact."""
    path = Path(path)
    lines = ["date,close"]
    lines += [f"{d.isoformat()},{float(c)!r}" for d, c in zip(series.dates, series.closes)]
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_universe(directory: str | os.PathLike) -> tuple[list[PriceSeries], list[tuple[str, str]]]:
    """Load every ``*.csv`` in ``directory``.

    Returns the loaded series (sorted by symbol) and a list of
    ``(symbol, reason)`` for files that failed to parse.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"universe directory not found: {directory}")
    series, failed = [], []
    for path in sorted(directory.glob("*.csv")):
        try:
            series.append(load_csv(path))
        except DataError as exc:
            failed.append((path.stem, str(exc)))
    return series, failed


def split_at(series: PriceSeries, split_date: dt.date) -> tuple[PriceSeries, PriceSeries]:
    """Split into observations strictly before ``split_date`` and the rest."""
    k = sum(1 for d in series.dates if d < split_date)
    if k == 0:
        raise DataError(f"{series.symbol}: empty first part")
    if k == len(series):
        raise DataError(f"{series.symbol}: empty second part")
    return series.slice(0, k), series.slice(k)


def business_days(n: int, start: dt.date = DEFAULT_START) -> tuple[dt.date, ...]:
    days = np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")
    return tuple(d.item() for d in days)


def normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normal deviates from PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed)).standard_normal(count)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")


def _series(symbol: str, log_prices: np.ndarray, start: dt.date) -> PriceSeries:
    return PriceSeries(symbol, business_days(len(log_prices), start), np.exp(log_prices))


def synth_random_walk(
    n: int,
    seed: int,
    sigma: float = 0.01,
    p0: float = 100.0,
    *,
    symbol: str = "RW",
    start: dt.date = DEFAULT_START,
) -> PriceSeries:
    """Geometric random walk: log-price gets i.i.d. ``sigma * z`` steps from ``ln p0``."""
    _check_n(n)
    if sigma < 0 or p0 <= 0:
        raise ValueError("need sigma >= 0 and p0 > 0")
    x = np.empty(n)
    x[0] = 0.0
    x[1:] = np.cumsum(sigma * normals(seed, n - 1))
    return PriceSeries(symbol, business_days(n, start), p0 * np.exp(x))


def synth_ou(
    n: int,
    seed: int,
    theta: float = 0.3,
    mu: float = math.log(100.0),
    sigma: float = 0.02,
    x0: float | None = None,
    *,
    symbol: str = "OU",
    start: dt.date = DEFAULT_START,
) -> PriceSeries:
    """Discrete Ornstein-Uhlenbeck log-price; ``x0`` defaults to ``mu``."""
    _check_n(n)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    z = normals(seed, n - 1)
    x = np.empty(n)
    x[0] = mu if x0 is None else x0
    for t in range(1, n):
        x[t] = x[t - 1] + theta * (mu - x[t - 1]) + sigma * z[t - 1]
    return _series(symbol, x, start)


def synth_persistent(
    n: int,
    seed: int,
    phi: float = 0.6,
    sigma: float = 0.01,
    p0: float = 100.0,
    *,
    symbol: str = "PS",
    start: dt.date = DEFAULT_START,
) -> PriceSeries:
    """Log-price whose increments follow AR(1) with coefficient ``phi`` (d_0 = 0)."""
    _check_n(n)
    if not 0 <= phi < 1:
        raise ValueError("phi must lie in [0, 1)")
    if sigma < 0 or p0 <= 0:
        raise ValueError("need sigma >= 0 and p0 > 0")
    z = normals(seed, n - 1)
    d = np.empty(n - 1)
    prev = 0.0
    for t in range(n - 1):
        prev = phi * prev + sigma * z[t]
        d[t] = prev
    x = np.empty(n)
    x[0] = 0.0
    x[1:] = np.cumsum(d)
    return PriceSeries(symbol, business_days(n, start), p0 * np.exp(x))


def log_returns(series: PriceSeries) -> ReturnSequence:
    if len(series) < 2:
        raise DataError("need at least two prices for returns")
    c = series.closes
    return ReturnSequence(np.log(c[1:] / c[:-1]), kind="log")


def concat(parts: Iterable[PriceSeries]) -> PriceSeries:
    parts = list(parts)
    dates: Sequence[dt.date] = tuple(d for p in parts for d in p.dates)
    return PriceSeries(parts[0].symbol, tuple(dates), np.concatenate([p.closes for p in parts]))
