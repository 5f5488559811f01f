"""Hurst exponent by classical rescaled-range (R/S) analysis.

The estimate works on log-price increments, so multiplying every price by
a constant leaves it unchanged.  Block sizes are powers of two from 8 up to
half the number of increments; each block size contributes the mean R/S of
its non-overlapping blocks, and H is the OLS slope of ln(R/S) on ln(size).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .marketdata import PriceSeries

__all__ = [
    "Regime",
    "HurstEstimate",
    "HurstError",
    "rs_statistic",
    "lag_grid",
    "estimate_hurst",
    "classify",
    "MIN_LENGTH",
]

MIN_LENGTH = 65
MIN_LAG = 8
H_FLOOR, H_CEIL = 0.01, 0.99


class HurstError(ValueError):
    pass


class Regime(enum.Enum):
    TRENDING = "trending"
    MEAN_REVERTING = "mean_reverting"


@dataclass(frozen=True)
class HurstEstimate:
    h: float
    raw_slope: float
    r_squared: float
    lags_used: tuple[int, ...]
    n_obs: int


def rs_statistic(increments: Sequence[float], block_size: int) -> float:
    """Mean rescaled range over the non-overlapping blocks of ``block_size``.

    Blocks with zero standard deviation are left out; if every block is
    flat the statistic is undefined.
    """
    x = np.asarray(increments, dtype=float).reshape(-1)
    if block_size < 2:
        raise HurstError("block_size must be at least 2")
    if len(x) < block_size:
        raise HurstError(f"need at least {block_size} increments, got {len(x)}")
    m = len(x) // block_size
    blocks = x[: m * block_size].reshape(m, block_size)
    dev = np.cumsum(blocks - blocks.mean(axis=1, keepdims=True), axis=1)
    r = dev.max(axis=1) - dev.min(axis=1)
    s = blocks.std(axis=1)
    # flat blocks can leave a ~1e-17 std from rounding in the mean
    ok = (s > 0) & (blocks.max(axis=1) > blocks.min(axis=1))
    if not ok.any():
        raise HurstError("degenerate block: zero variance in every block")
    return float(np.mean(r[ok] / s[ok]))


def lag_grid(n_obs: int) -> list[int]:
    lags, b = [], MIN_LAG
    while 2 * b <= n_obs:
        lags.append(b)
        b *= 2
    return lags


def estimate_hurst(series: PriceSeries) -> HurstEstimate:
    if len(series) < MIN_LENGTH:
        raise HurstError(
            f"{series.symbol}: series too short for Hurst estimate "
            f"({len(series)} < {MIN_LENGTH})"
        )
    c = series.closes
    # ratio first: exact under power-of-two rescaling
    inc = np.log(c[1:] / c[:-1])
    lags = lag_grid(len(inc))
    if len(lags) < 3:
        raise HurstError(f"{series.symbol}: fewer than 3 usable lag points")
    rs = np.array([rs_statistic(inc, b) for b in lags])
    if np.any(rs <= 0):
        raise HurstError(f"{series.symbol}: non-positive R/S value")
    x = np.log(np.array(lags, dtype=float))
    y = np.log(rs)
    xc = x - x.mean()
    yc = y - y.mean()
    slope = float(xc @ yc / (xc @ xc))
    ss_tot = float(yc @ yc)
    resid = yc - slope * xc
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return HurstEstimate(
        h=min(max(slope, H_FLOOR), H_CEIL),
        raw_slope=slope,
        r_squared=min(max(r2, 0.0), 1.0),
        lags_used=tuple(lags),
        n_obs=len(inc),
    )


def classify(h: float, boundary: float = 0.5) -> Regime:
    """Trending when ``h`` is strictly above ``boundary``; ties go to mean reversion."""
    return Regime.TRENDING if h > boundary else Regime.MEAN_REVERTING
