"""Summary statistics, histograms and the Sharpe ratio.

Sums go through :func:`math.fsum`, which is correctly rounded and therefore
independent of input order: permuting the values cannot change a summary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = ["SummaryStats", "HistogramData", "summary", "histogram", "sharpe"]


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    std: float  # sample (n - 1)
    n: int
    degenerate: bool = False  # True when n == 1 and std is reported as 0

    def as_dict(self) -> dict:
        return {"mean": self.mean, "median": self.median, "std": self.std, "n": self.n,
                "degenerate": self.degenerate}


@dataclass(frozen=True, eq=False)
class HistogramData:
    bin_edges: np.ndarray
    counts: np.ndarray

    def rows(self) -> list[tuple[float, float, int]]:
        e = self.bin_edges
        return [(float(e[i]), float(e[i + 1]), int(c)) for i, c in enumerate(self.counts)]


def summary(values: Iterable[float]) -> SummaryStats:
    xs = [float(v) for v in values]
    n = len(xs)
    if n == 0:
        raise ValueError("summary of an empty sequence")
    mean = math.fsum(xs) / n
    s = sorted(xs)
    mid = n // 2
    median = s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2
    if n == 1:
        return SummaryStats(mean, median, 0.0, 1, degenerate=True)
    if s[0] == s[-1]:
        # fsum(xs) / n need not round back to the common value
        return SummaryStats(s[0], median, 0.0, n)
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return SummaryStats(mean, median, math.sqrt(var), n)


def histogram(
    values: Sequence[float],
    bin_count: int,
    range: tuple[float, float] | None = None,
) -> HistogramData:
    """Equal-width histogram; bins are half-open except the last, which is closed."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if len(x) == 0:
        raise ValueError("histogram of an empty sequence")
    if bin_count < 1:
        raise ValueError("bin_count must be at least 1")
    lo, hi = (float(x.min()), float(x.max())) if range is None else map(float, range)
    if hi < lo:
        raise ValueError("histogram range is reversed")
    if hi == lo:
        if bin_count > 1:
            raise ValueError("zero-width range with more than one bin")
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bin_count + 1)
    inside = x[(x >= lo) & (x <= hi)]
    idx = np.searchsorted(edges, inside, side="right") - 1
    idx[inside == hi] = bin_count - 1
    counts = np.bincount(idx, minlength=bin_count)
    return HistogramData(edges, counts)


def sharpe(mean_return: float, std_return: float, risk_free: float = 0.02) -> float:
    """Excess return per unit of volatility, with no annualization.

    ``mean_return``, ``std_return`` and ``risk_free`` must refer to the same
    horizon.
    """
    if not std_return > 0:
        raise ValueError("std_return must be positive")
    return (mean_return - risk_free) / std_return
