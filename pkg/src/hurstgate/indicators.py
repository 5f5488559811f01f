"""Rolling-window indicators: simple moving average, rolling std, Bollinger bands.

Indicator arrays are aligned to their input and hold ``nan`` during the
warmup (indices below ``valid_from``); they are never zero padded.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["IndicatorSeries", "Bands", "sma", "rolling_std", "bollinger", "RollingStats"]


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    values: np.ndarray
    valid_from: int

    @property
    def defined(self) -> np.ndarray:
        """The values from ``valid_from`` onward."""
        return self.values[self.valid_from:]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        if i < self.valid_from:
            raise IndexError(f"index {i} is inside the warmup (valid from {self.valid_from})")
        return float(self.values[i])


@dataclass(frozen=True, eq=False)
class Bands:
    lower: IndicatorSeries
    middle: IndicatorSeries
    upper: IndicatorSeries

    @property
    def valid_from(self) -> int:
        return self.middle.valid_from


def _windows(values: Sequence[float], window: int, min_window: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(values, dtype=float).reshape(-1)
    if window < min_window:
        raise ValueError(f"window must be at least {min_window}, got {window}")
    if window > len(x):
        raise ValueError(f"window {window} exceeds series length {len(x)}")
    return x, sliding_window_view(x, window)


def _aligned(x: np.ndarray, window: int, defined: np.ndarray) -> IndicatorSeries:
    out = np.full(len(x), np.nan)
    out[window - 1:] = defined
    out.setflags(write=False)
    return IndicatorSeries(out, window - 1)


def _flat(win: np.ndarray) -> np.ndarray:
    return win.max(axis=1) == win.min(axis=1)


def sma(values: Sequence[float], window: int) -> IndicatorSeries:
    x, win = _windows(values, window, 1)
    means = win.mean(axis=1)
    # a constant window must average to exactly that constant
    flat = _flat(win)
    means[flat] = win[flat, 0]
    return _aligned(x, window, means)


def rolling_std(values: Sequence[float], window: int) -> IndicatorSeries:
    """Population (divide-by-window) standard deviation over a trailing window."""
    x, win = _windows(values, window, 2)
    std = win.std(axis=1)
    std[_flat(win)] = 0.0
    return _aligned(x, window, std)


def bollinger(values: Sequence[float], window: int = 20, k: float = 2.0) -> Bands:
    if k < 0:
        raise ValueError("k must be non-negative")
    mid = sma(values, window)
    sd = rolling_std(values, window)
    width = k * sd.values
    upper = mid.values + width
    lower = mid.values - width
    upper.setflags(write=False)
    lower.setflags(write=False)
    return Bands(
        IndicatorSeries(lower, mid.valid_from),
        mid,
        IndicatorSeries(upper, mid.valid_from),
    )


class RollingStats:
    """Streaming mean and population std over the last ``window`` values.

    Uses Welford's update while filling and the paired add/remove form once
    full.  A run of identical values spanning the window is reported as
    exactly flat, matching the batch functions.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError("window must be positive")
        self.window = window
        self._buf: deque[float] = deque()
        self._mean = 0.0
        self._m2 = 0.0
        self._run = 0  # length of the trailing run of equal values

    def push(self, value: float) -> None:
        value = float(value)
        buf = self._buf
        self._run = self._run + 1 if buf and buf[-1] == value else 1
        buf.append(value)
        if len(buf) <= self.window:
            delta = value - self._mean
            self._mean += delta / len(buf)
            self._m2 += delta * (value - self._mean)
            return
        old = buf.popleft()
        mean = self._mean + (value - old) / self.window
        self._m2 += (value - old) * (value - mean + old - self._mean)
        self._mean = mean

    @property
    def ready(self) -> bool:
        return len(self._buf) == self.window

    @property
    def mean(self) -> float:
        if self._run >= len(self._buf):
            return self._buf[-1]
        return self._mean

    @property
    def std(self) -> float:
        if self._run >= len(self._buf):
            return 0.0
        return math.sqrt(max(self._m2, 0.0) / len(self._buf))
