"""Route each symbol to momentum or mean reversion by its Hurst exponent.

For each symbol the exponent is estimated on the data before the split
date, and both strategies are traded on the data from the split date on.
A boundary ``x`` then picks, per symbol, the mean-reversion return when
``h <= x`` and the momentum return otherwise.
"""
from __future__ import annotations

import datetime as dt
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .backtest import meanrev_signals, momentum_signals, run_backtest
from .hurst import HurstError, Regime, classify, estimate_hurst
from .marketdata import DataError, PriceSeries, split_at
from .stats import SummaryStats, summary

__all__ = [
    "StrategyParams",
    "SymbolRow",
    "SweepPoint",
    "UniverseRun",
    "gated_return",
    "evaluate_symbol",
    "run_universe",
    "default_grid",
    "sweep",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StrategyParams:
    short_window: int = 5
    long_window: int = 10
    band_window: int = 20
    band_k: float = 2.0


@dataclass(frozen=True)
class SymbolRow:
    symbol: str
    h: float
    r_momentum: float
    r_meanrev: float
    trades_momentum: int = 0
    trades_meanrev: int = 0
    trade_returns_momentum: tuple[float, ...] = field(default=(), repr=False, compare=False)
    trade_returns_meanrev: tuple[float, ...] = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class SweepPoint:
    boundary: float
    stats: SummaryStats


class UniverseRun(NamedTuple):
    rows: list[SymbolRow]
    skipped: list[tuple[str, str]]


def gated_return(row: SymbolRow, boundary: float) -> float:
    if classify(row.h, boundary) is Regime.MEAN_REVERTING:
        return row.r_meanrev
    return row.r_momentum


def evaluate_symbol(
    series: PriceSeries, split_date: dt.date, params: StrategyParams = StrategyParams()
) -> SymbolRow:
    """One universe row; raises ``DataError``/``HurstError``/``ValueError`` when unusable."""
    first, second = split_at(series, split_date)
    est = estimate_hurst(first)
    need = max(params.long_window, params.band_window)
    if len(second) < need:
        raise DataError(f"second part has {len(second)} days, strategies need {need}")
    mom = run_backtest(second, momentum_signals(second, params.short_window, params.long_window))
    mr = run_backtest(second, meanrev_signals(second, params.band_window, params.band_k))
    return SymbolRow(
        series.symbol,
        est.h,
        mom.final_return,
        mr.final_return,
        len(mom.trades),
        len(mr.trades),
        tuple(t.trade_return for t in mom.trades),
        tuple(t.trade_return for t in mr.trades),
    )


def _evaluate(args) -> SymbolRow | tuple[str, str]:
    series, split_date, params = args
    try:
        return evaluate_symbol(series, split_date, params)
    except (DataError, HurstError, ValueError) as exc:
        return (series.symbol, str(exc))


def run_universe(
    universe: Iterable[PriceSeries],
    split_date: dt.date,
    params: StrategyParams = StrategyParams(),
    workers: int = 1,
) -> UniverseRun:
    """Evaluate every symbol; failures are skipped with a reason, in input order."""
    jobs = [(s, split_date, params) for s in universe]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_evaluate(j) for j in jobs]
    rows, skipped = [], []
    for res in results:
        if isinstance(res, SymbolRow):
            rows.append(res)
        else:
            log.warning("skipping %s: %s", *res)
            skipped.append(res)
    if not rows:
        raise DataError("empty universe after filtering")
    return UniverseRun(rows, skipped)


def default_grid(step: float = 0.01) -> list[float]:
    if not 0 < step <= 1:
        raise ValueError("grid step must lie in (0, 1]")
    count = int(round(1.0 / step))
    if not abs(count * step - 1.0) < 1e-9:
        raise ValueError("grid step must divide 1 evenly")
    return [round(i / count, 12) for i in range(count + 1)]


def sweep(rows: Sequence[SymbolRow], grid: Sequence[float] | None = None) -> list[SweepPoint]:
    """Summary of gated returns at each boundary; rows are taken in the given order."""
    if not rows:
        raise ValueError("sweep needs at least one row")
    grid = default_grid() if grid is None else list(grid)
    if any(not 0 <= x <= 1 for x in grid):
        raise ValueError("grid values must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be increasing")
    return [SweepPoint(x, summary([gated_return(r, x) for r in rows])) for x in grid]
