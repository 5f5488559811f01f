"""Brute-force oracles and shared experiment setups for the test suite.

The oracles are deliberately naive (plain loops over Python floats) and do
not call into the package's indicator code.
"""
from __future__ import annotations

import math
from dataclasses import replace
from functools import lru_cache

import numpy as np

from hurstgate.marketdata import PriceSeries, split_at
from hurstgate.qlearn import (
    Hyperparams,
    PolicyMode,
    StateSpec,
    evaluate,
    reference_edges,
    synth_planted,
    train,
)


def brute_sma(xs, w, i):
    return sum(xs[i - w + 1 : i + 1]) / w


def brute_pstd(xs, w, i):
    win = xs[i - w + 1 : i + 1]
    m = sum(win) / w
    return math.sqrt(sum((v - m) ** 2 for v in win) / w)


def brute_momentum_markers(closes, short=5, long=10):
    xs = [float(c) for c in closes]
    out = [0] * len(xs)
    for i in range(long, len(xs)):
        s0, l0 = brute_sma(xs, short, i - 1), brute_sma(xs, long, i - 1)
        s1, l1 = brute_sma(xs, short, i), brute_sma(xs, long, i)
        if s0 <= l0 and s1 > l1:
            out[i] = 1
        elif s0 >= l0 and s1 < l1:
            out[i] = -1
    return out


def brute_meanrev_markers(closes, window=20, k=2.0):
    xs = [float(c) for c in closes]
    out = [0] * len(xs)
    start = window - 1

    def bands(i):
        m = brute_sma(xs, window, i)
        sd = brute_pstd(xs, window, i)
        return m - k * sd, m

    for i in range(start, len(xs)):
        lo, mid = bands(i)
        if xs[i] < lo and (i == start or xs[i - 1] >= bands(i - 1)[0]):
            out[i] = 1
        elif i > start and xs[i - 1] <= bands(i - 1)[1] and xs[i] > mid:
            out[i] = -1
    return out


def type7_quantile(sorted_xs, p):
    """Linear interpolation between order statistics at position (n - 1) p."""
    pos = (len(sorted_xs) - 1) * p
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_xs) - 1)
    return sorted_xs[lo] + (pos - lo) * (sorted_xs[hi] - sorted_xs[lo])


# -- planted-signal experiment ----------------------------------------------

PLANTED_N = 1000
PLANTED_EQUITIES = 20
BASE_SPEC = StateSpec()


@lru_cache(maxsize=1)
def planted_reference() -> StateSpec:
    return replace(BASE_SPEC, edges=reference_edges(BASE_SPEC))


def planted_universe(seed: int, count: int = PLANTED_EQUITIES) -> list[tuple[PriceSeries, PriceSeries]]:
    """``count`` planted-signal equities split into (train half, eval half)."""
    ref = planted_reference()
    series = [
        synth_planted(PLANTED_N, seed * 1000 + i, ref, symbol=f"PL{i:02d}") for i in range(count)
    ]
    split = series[0].dates[PLANTED_N // 2]
    return [split_at(s, split) for s in series]


def ensemble_sharpe(parts, train_count: int, mode: PolicyMode, hyper: Hyperparams = Hyperparams()) -> float:
    """Train on the first ``train_count`` train halves; mean Sharpe over every eval half.

    An evaluation with no spread in returns (nothing traded) counts as 0.
    """
    table = train([p[0] for p in parts[:train_count]], BASE_SPEC, hyper)
    sharpes = [evaluate(table, p[1], mode).sharpe for p in parts]
    return float(np.mean([0.0 if s is None else s for s in sharpes]))
