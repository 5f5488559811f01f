"""Momentum (SMA crossover) and mean-reversion (Bollinger) signals and a
long/flat executor that fills at the signal day's close."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .indicators import bollinger, sma
from .marketdata import PriceSeries, ReturnSequence

__all__ = [
    "Signal",
    "SignalSeries",
    "TradeRecord",
    "BacktestResult",
    "momentum_signals",
    "meanrev_signals",
    "run_backtest",
    "per_trade_returns",
]


class Signal(enum.IntEnum):
    NONE = 0
    ENTER = 1
    EXIT = -1


@dataclass(frozen=True, eq=False)
class SignalSeries:
    markers: np.ndarray  # int8 values of Signal
    valid_from: int

    def __len__(self) -> int:
        return len(self.markers)

    @property
    def enters(self) -> np.ndarray:
        return np.flatnonzero(self.markers == Signal.ENTER)

    @property
    def exits(self) -> np.ndarray:
        return np.flatnonzero(self.markers == Signal.EXIT)


@dataclass(frozen=True)
class TradeRecord:
    entry_index: int
    exit_index: int
    entry_price: float
    exit_price: float

    @property
    def trade_return(self) -> float:
        return self.exit_price / self.entry_price - 1.0


@dataclass(frozen=True, eq=False)
class BacktestResult:
    trades: tuple[TradeRecord, ...]
    equity_curve: np.ndarray

    @property
    def final_return(self) -> float:
        return float(self.equity_curve[-1]) - 1.0


def _freeze(markers: np.ndarray, valid_from: int) -> SignalSeries:
    markers.setflags(write=False)
    return SignalSeries(markers, valid_from)


def momentum_signals(series: PriceSeries, short_window: int = 5, long_window: int = 10) -> SignalSeries:
    """Golden cross enters, death cross exits.

    Crosses are strict: the short average must move from at-or-below the
    long average to strictly above it (or the mirror for exits).  The first
    day both averages exist has no prior day and never signals.
    """
    if not 1 <= short_window < long_window:
        raise ValueError("need 1 <= short_window < long_window")
    if long_window > len(series):
        raise ValueError(f"long_window {long_window} exceeds series length {len(series)}")
    s = sma(series.closes, short_window).values
    l = sma(series.closes, long_window).values
    start = long_window - 1
    markers = np.zeros(len(series), dtype=np.int8)
    prev_s, prev_l = s[start:-1], l[start:-1]
    cur_s, cur_l = s[start + 1:], l[start + 1:]
    up = (prev_s <= prev_l) & (cur_s > cur_l)
    down = (prev_s >= prev_l) & (cur_s < cur_l)
    markers[start + 1:][up] = Signal.ENTER
    markers[start + 1:][down] = Signal.EXIT
    return _freeze(markers, start)


def meanrev_signals(series: PriceSeries, window: int = 20, k: float = 2.0) -> SignalSeries:
    """Enter on a close breaking below the lower band, exit on an upward
    cross of the middle band."""
    if window > len(series):
        raise ValueError(f"window {window} exceeds series length {len(series)}")
    bands = bollinger(series.closes, window, k)
    c = series.closes
    lo, mid = bands.lower.values, bands.middle.values
    start = bands.valid_from
    markers = np.zeros(len(series), dtype=np.int8)
    below = c < lo
    below[:start] = False
    enter = below.copy()
    enter[start + 1:] &= c[start:-1] >= lo[start:-1]
    exit_ = np.zeros(len(series), dtype=bool)
    exit_[start + 1:] = (c[start:-1] <= mid[start:-1]) & (c[start + 1:] > mid[start + 1:])
    markers[enter] = Signal.ENTER
    markers[exit_] = Signal.EXIT
    return _freeze(markers, start)


def run_backtest(series: PriceSeries, signals: SignalSeries) -> BacktestResult:
    """Execute signals all-in, long or flat, with no costs.

    An entry on the final bar is ignored since it cannot be closed at a
    later price; a position still open at the end is sold at the last close.
    """
    if len(signals) != len(series):
        raise ValueError(f"signals ({len(signals)}) misaligned with series ({len(series)})")
    c = series.closes
    n = len(c)
    last = n - 1
    equity = np.empty(n)
    equity[0] = 1.0
    trades: list[TradeRecord] = []
    entry: int | None = None
    for i in range(1, n):
        equity[i] = equity[i - 1] * (c[i] / c[i - 1]) if entry is not None else equity[i - 1]
        sig = signals.markers[i]
        if entry is None and sig == Signal.ENTER and i < last:
            entry = i
        elif entry is not None and (sig == Signal.EXIT or i == last):
            trades.append(TradeRecord(entry, i, float(c[entry]), float(c[i])))
            entry = None
    equity.setflags(write=False)
    return BacktestResult(tuple(trades), equity)


def per_trade_returns(result: BacktestResult) -> ReturnSequence:
    return ReturnSequence(np.array([t.trade_return for t in result.trades]), kind="simple")
