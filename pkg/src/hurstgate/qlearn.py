"""Tabular Q-learning momentum agent.

The state is a pair of discretized moving-average spreads, (d_t, d_{t-1}),
where ``d_t = (sma_short[t] - sma_long[t]) / sma_long[t]``.  Each day the
agent is either long or short from one close to the next.  The reward of
the opposite action is the exact negation of the chosen one, so by default
both cells of a state are updated on every step.

With ``gamma = 0`` and the harmonic step size ``1 / (n + 1)`` the Q value of
a cell is its running mean reward, bit for bit.
"""
from __future__ import annotations

import bisect
import datetime as dt
import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .indicators import sma
from .marketdata import PriceSeries, business_days, normals
from .stats import sharpe as sharpe_ratio

__all__ = [
    "TradeAction",
    "PolicyMode",
    "StateSpec",
    "BinEdges",
    "QCell",
    "Hyperparams",
    "QTable",
    "EvalRecord",
    "momentum_features",
    "momentum_feature",
    "fit_bins",
    "fit_state_spec",
    "state_of",
    "reward",
    "q_update",
    "train",
    "policy_act",
    "evaluate",
    "reference_edges",
    "synth_planted",
]

HARMONIC = "harmonic"
FORMAT_VERSION = 1


class TradeAction(enum.Enum):
    LONG = "long"
    SHORT = "short"
    ABSTAIN = "abstain"


TRADED = (TradeAction.LONG, TradeAction.SHORT)


class PolicyMode(enum.Enum):
    FORCED = "forced"
    RESTRICTED = "restricted"


@dataclass(frozen=True)
class StateSpec:
    short_window: int = 5
    long_window: int = 10
    bins_per_dim: int = 5
    edges: tuple[float, ...] | None = None  # shared by both dimensions

    def __post_init__(self) -> None:
        if not 1 <= self.short_window < self.long_window:
            raise ValueError("need 1 <= short_window < long_window")
        if self.bins_per_dim < 1:
            raise ValueError("bins_per_dim must be at least 1")
        if self.edges is not None:
            edges = tuple(float(e) for e in self.edges)
            if len(edges) != self.bins_per_dim - 1:
                raise ValueError("need bins_per_dim - 1 edges")
            if any(b < a for a, b in zip(edges, edges[1:])):
                raise ValueError("edges must be non-decreasing")
            object.__setattr__(self, "edges", edges)

    @property
    def n_states(self) -> int:
        return self.bins_per_dim ** 2


class BinEdges(NamedTuple):
    edges: tuple[float, ...]
    effective_bins: int

    @property
    def collapsed(self) -> bool:
        return self.effective_bins < len(self.edges) + 1


@dataclass(frozen=True, slots=True)
class QCell:
    q: float = 0.0
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    @property
    def t_stat(self) -> float:
        """One-sample t statistic of the rewards against zero."""
        if self.n < 2:
            return math.nan
        se = math.sqrt(self.variance / self.n)
        if se == 0:
            return math.inf if self.mean != 0 else 0.0
        return abs(self.mean) / se


@dataclass(frozen=True)
class Hyperparams:
    alpha: float | str = HARMONIC
    gamma: float = 0.0
    update: str = "both"  # "both" or "epsilon_greedy"
    epsilon: float = 0.1
    t_threshold: float = 1.96
    n_min: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        if self.alpha != HARMONIC and not (
            isinstance(self.alpha, (int, float)) and 0 < self.alpha <= 1
        ):
            raise ValueError(f"alpha must be in (0, 1] or {HARMONIC!r}")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if self.update not in ("both", "epsilon_greedy"):
            raise ValueError("update must be 'both' or 'epsilon_greedy'")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must lie in [0, 1]")


State = tuple[int, int]


@dataclass
class QTable:
    spec: StateSpec
    hyperparams: Hyperparams
    cells: dict[tuple[State, TradeAction], QCell] = field(default_factory=dict)
    train_range: tuple[dt.date, dt.date] | None = None
    steps: int = 0

    def cell(self, state: State, action: TradeAction) -> QCell | None:
        return self.cells.get((state, action))

    def q(self, state: State, action: TradeAction) -> float:
        c = self.cells.get((state, action))
        return 0.0 if c is None else c.q

    def to_json(self) -> str:
        spec = asdict(self.spec)
        spec["edges"] = list(self.spec.edges) if self.spec.edges is not None else None
        cells = [
            {
                "state": list(s),
                "action": a.value,
                "q": c.q,
                "n": c.n,
                "mean": c.mean,
                "m2": c.m2,
                "variance": None if c.n < 2 else c.variance,
            }
            for (s, a), c in sorted(self.cells.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
        ]
        doc = {
            "format_version": FORMAT_VERSION,
            "spec": spec,
            "hyperparams": asdict(self.hyperparams),
            "train_range": None
            if self.train_range is None
            else [d.isoformat() for d in self.train_range],
            "steps": self.steps,
            "cells": cells,
        }
        return json.dumps(doc, indent=1, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        doc = json.loads(text)
        spec = doc["spec"]
        if spec.get("edges") is not None:
            spec["edges"] = tuple(spec["edges"])
        cells = {
            ((int(c["state"][0]), int(c["state"][1])), TradeAction(c["action"])): QCell(
                float(c["q"]), int(c["n"]), float(c["mean"]), float(c["m2"])
            )
            for c in doc["cells"]
        }
        tr = doc.get("train_range")
        return cls(
            StateSpec(**spec),
            Hyperparams(**doc["hyperparams"]),
            cells,
            None if tr is None else (dt.date.fromisoformat(tr[0]), dt.date.fromisoformat(tr[1])),
            int(doc.get("steps", 0)),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.hyperparams == other.hyperparams
            and self.cells == other.cells
            and self.train_range == other.train_range
            and self.steps == other.steps
        )


# -- features and states ----------------------------------------------------


def momentum_features(closes: Sequence[float], spec: StateSpec) -> np.ndarray:
    """Relative MA spread for every index; ``nan`` before ``long_window - 1``."""
    s = sma(closes, spec.short_window).values
    l = sma(closes, spec.long_window).values
    return (s - l) / l


def momentum_feature(series: PriceSeries, t: int, spec: StateSpec) -> float:
    if t < spec.long_window - 1:
        raise ValueError(f"t={t} is inside the warmup of {spec.long_window - 1} days")
    if t >= len(series):
        raise IndexError(t)
    return float(momentum_features(series.closes[: t + 1], spec)[t])


def fit_bins(features: Sequence[float], bins_per_dim: int) -> BinEdges:
    """Quantile edges at k / bins_per_dim (linear interpolation between order statistics)."""
    x = np.asarray(features, dtype=float).reshape(-1)
    x = x[np.isfinite(x)]
    if len(x) == 0:
        raise ValueError("cannot fit bins to an empty feature set")
    if bins_per_dim < 1:
        raise ValueError("bins_per_dim must be at least 1")
    qs = [k / bins_per_dim for k in range(1, bins_per_dim)]
    edges = tuple(float(e) for e in np.quantile(x, qs)) if qs else ()
    effective = 1 + len(set(edges))
    return BinEdges(edges, effective)


def fit_state_spec(universe: Iterable[PriceSeries], spec: StateSpec = StateSpec()) -> StateSpec:
    feats = [momentum_features(s.closes, spec) for s in universe if len(s) >= spec.long_window]
    if not feats:
        raise ValueError("no series long enough to fit bins")
    return replace(spec, edges=fit_bins(np.concatenate(feats), spec.bins_per_dim).edges)


def _bin(value: float, edges: Sequence[float]) -> int:
    return bisect.bisect_right(edges, value)


def state_of(d_t: float, d_prev: float, spec: StateSpec) -> State:
    if spec.edges is None:
        raise ValueError("state spec has no fitted edges")
    return (_bin(d_t, spec.edges), _bin(d_prev, spec.edges))


def _states(closes: np.ndarray, spec: StateSpec) -> tuple[np.ndarray, np.ndarray]:
    d = momentum_features(closes, spec)
    edges = np.asarray(spec.edges, dtype=float)
    b = np.searchsorted(edges, d, side="right")
    return b, d


def reward(series: PriceSeries, t: int, action: TradeAction) -> float:
    if not 0 <= t < len(series) - 1:
        raise IndexError(f"no next-day close after t={t}")
    if action is TradeAction.ABSTAIN:
        return 0.0
    c = series.closes
    r = float(c[t + 1] / c[t] - 1.0)
    return r if action is TradeAction.LONG else -r


# -- learning ---------------------------------------------------------------


def q_update(
    cell: QCell, r: float, alpha: float | str = HARMONIC, gamma: float = 0.0, max_next_q: float = 0.0
) -> QCell:
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    n1 = cell.n + 1
    target = r + gamma * max_next_q
    if alpha == HARMONIC:
        q = cell.q + (target - cell.q) / n1
    else:
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        q = cell.q + alpha * (target - cell.q)
    delta = r - cell.mean
    mean = cell.mean + delta / n1
    return QCell(q, n1, mean, cell.m2 + delta * (r - mean))


def _greedy(table: QTable, state: State) -> TradeAction:
    return TradeAction.SHORT if table.q(state, TradeAction.SHORT) > table.q(state, TradeAction.LONG) else TradeAction.LONG


def valid_steps(n: int, spec: StateSpec) -> range:
    """Days ``t`` with a defined state (needs d_{t-1}) and a next-day reward."""
    return range(spec.long_window, n - 1)


def train(
    universe: Iterable[PriceSeries],
    spec: StateSpec = StateSpec(),
    hyper: Hyperparams = Hyperparams(),
    stream: list | None = None,
) -> QTable:
    """Fit a Q table over ``universe``, each series walked in time order.

    Bin edges are fitted on the universe itself when ``spec`` has none.  If
    ``stream`` is given, every update is appended to it as
    ``(state, action, reward)``.
    """
    universe = [s for s in universe]
    if not universe:
        raise ValueError("empty training universe")
    usable = [s for s in universe if len(valid_steps(len(s), spec)) > 0]
    if not usable:
        raise ValueError("every training series is too short")
    if spec.edges is None:
        spec = fit_state_spec(usable, spec)
    table = QTable(spec, hyper)
    cells = table.cells
    rng = np.random.Generator(np.random.PCG64(hyper.seed))
    alpha, gamma = hyper.alpha, hyper.gamma
    first = min(s.dates[0] for s in usable)
    last = max(s.dates[-1] for s in usable)
    blank = QCell()

    for series in usable:
        c = series.closes
        bins, _ = _states(c, spec)
        for t in valid_steps(len(c), spec):
            state = (int(bins[t]), int(bins[t - 1]))
            r = float(c[t + 1] / c[t] - 1.0)
            max_next = 0.0
            if gamma:
                nxt = (int(bins[t + 1]), int(bins[t]))
                max_next = max(table.q(nxt, TradeAction.LONG), table.q(nxt, TradeAction.SHORT))
            if hyper.update == "both":
                chosen = TRADED
            elif rng.random() < hyper.epsilon:
                chosen = (TRADED[int(rng.integers(2))],)
            else:
                chosen = (_greedy(table, state),)
            for action in chosen:
                ra = r if action is TradeAction.LONG else -r
                key = (state, action)
                cells[key] = q_update(cells.get(key, blank), ra, alpha, gamma, max_next)
                if stream is not None:
                    stream.append((state, action, ra))
            table.steps += 1
    table.train_range = (first, last)
    return table


# -- acting -----------------------------------------------------------------


def policy_act(
    table: QTable,
    state: State,
    mode: PolicyMode,
    t_threshold: float | None = None,
    n_min: int | None = None,
) -> TradeAction:
    """Greedy action (ties go long); the restricted mode abstains unless the
    greedy cell's mean reward is significantly non-zero."""
    t_threshold = table.hyperparams.t_threshold if t_threshold is None else t_threshold
    n_min = table.hyperparams.n_min if n_min is None else n_min
    long_cell = table.cell(state, TradeAction.LONG)
    short_cell = table.cell(state, TradeAction.SHORT)
    unseen = (long_cell is None or long_cell.n == 0) and (short_cell is None or short_cell.n == 0)
    if unseen:
        return TradeAction.LONG if mode is PolicyMode.FORCED else TradeAction.ABSTAIN
    best = _greedy(table, state)
    if mode is PolicyMode.FORCED:
        return best
    cell = table.cell(state, best)
    if cell is None or cell.n < n_min or not cell.t_stat >= t_threshold:
        return TradeAction.ABSTAIN
    return best


@dataclass(frozen=True, eq=False)
class EvalRecord:
    symbol: str
    mode: PolicyMode
    dates: tuple[dt.date, ...]
    actions: tuple[TradeAction, ...]
    daily_returns: np.ndarray
    sharpe: float | None  # None when the returns have zero spread

    @property
    def action_counts(self) -> dict[str, int]:
        counts = {a.value: 0 for a in TradeAction}
        for a in self.actions:
            counts[a.value] += 1
        return counts

    @property
    def degenerate(self) -> bool:
        return self.sharpe is None


def evaluate(table: QTable, series: PriceSeries, mode: PolicyMode) -> EvalRecord:
    """Trade ``series`` with the table's policy; Sharpe is daily, risk-free 0."""
    spec = table.spec
    steps = valid_steps(len(series), spec)
    if len(steps) < 2:
        raise ValueError(f"{series.symbol}: series too short to evaluate")
    if table.train_range is not None:
        lo, hi = table.train_range
        if series.dates[0] <= hi and series.dates[-1] >= lo:
            raise ValueError(
                f"{series.symbol}: evaluation dates overlap the training range {lo}..{hi}"
            )
    c = series.closes
    bins, _ = _states(c, spec)
    actions, rets = [], []
    for t in steps:
        a = policy_act(table, (int(bins[t]), int(bins[t - 1])), mode)
        r = float(c[t + 1] / c[t] - 1.0)
        actions.append(a)
        rets.append(0.0 if a is TradeAction.ABSTAIN else (r if a is TradeAction.LONG else -r))
    daily = np.array(rets)
    sd = float(np.std(daily, ddof=1))
    sr = sharpe_ratio(float(np.mean(daily)), sd, 0.0) if sd > 0 else None
    return EvalRecord(
        series.symbol, mode, tuple(series.dates[t] for t in steps), tuple(actions), daily, sr
    )


# -- planted-signal environment ---------------------------------------------


def reference_edges(spec: StateSpec = StateSpec(), sigma: float = 0.01, n: int = 20000, seed: int = 0) -> tuple[float, ...]:
    """Quantile edges of the MA-spread feature under a pure random walk."""
    z = normals(seed, n - 1)
    closes = 100.0 * np.exp(np.concatenate([[0.0], np.cumsum(sigma * z)]))
    return fit_bins(momentum_features(closes, spec), spec.bins_per_dim).edges


def synth_planted(
    n: int,
    seed: int,
    spec: StateSpec,
    target: State | None = None,
    drift: float = 0.005,
    sigma: float = 0.01,
    p0: float = 100.0,
    *,
    symbol: str = "PL",
    start: dt.date = dt.date(2021, 1, 4),
) -> PriceSeries:
    """Regime-switching prices with a planted edge in one state.

    Next-day simple returns are ``sigma * z`` everywhere, plus ``drift`` on
    days whose state under ``spec`` (fixed edges) equals ``target``.  The
    target defaults to the top bin in both dimensions.
    """
    if spec.edges is None:
        raise ValueError("planted generator needs a spec with fixed edges")
    if n < spec.long_window + 2:
        raise ValueError("n too short for the state warmup")
    target = (spec.bins_per_dim - 1, spec.bins_per_dim - 1) if target is None else target
    z = normals(seed, n - 1)
    closes = np.empty(n)
    closes[0] = p0
    sw, lw = spec.short_window, spec.long_window
    prev_bin = None
    for t in range(n - 1):
        mu = 0.0
        if t >= lw - 1:
            s = math.fsum(closes[t - sw + 1 : t + 1]) / sw
            l = math.fsum(closes[t - lw + 1 : t + 1]) / lw
            b = _bin((s - l) / l, spec.edges)
            if prev_bin is not None and (b, prev_bin) == target:
                mu = drift
            prev_bin = b
        # keep prices positive under extreme draws
        closes[t + 1] = closes[t] * max(1.0 + mu + sigma * z[t], 1e-6)
    return PriceSeries(symbol, business_days(n, start), closes)
