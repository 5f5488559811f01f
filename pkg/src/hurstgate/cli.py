"""Command-line entry point: ``hurstgate {synth,pipeline,sweep,qtrain,qeval}``.

Every command writes CSV/JSON only and echoes its resolved configuration
into ``config.json`` in the output directory.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, read_config_file, resolve
from .marketdata import (
    DataError,
    PriceSeries,
    atomic_write_text,
    load_universe,
    synth_ou,
    synth_persistent,
    synth_random_walk,
    write_csv,
)
from .qlearn import Hyperparams, PolicyMode, QTable, StateSpec, evaluate, train
from .selector import StrategyParams, default_grid, gated_return, run_universe, sweep
from .stats import histogram, summary

log = logging.getLogger("hurstgate")

REPORT_FORMAT = 1
SYNTH_PREFIX = {"randomwalk": "RW", "ou": "OU", "persistent": "PS"}


class UsageError(Exception):
    """Bad input from the user; reported with exit code 2."""


# -- writers ----------------------------------------------------------------


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    atomic_write_text(path, _csv_text(header, rows))


def _write_json(path: Path, doc) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _f(x: float) -> str:
    return repr(float(x))


def _meta(cfg: RunConfig, command: str) -> dict:
    return {"tool": "hurstgate", "version": __version__, "report_format": REPORT_FORMAT,
            "command": command, "config": cfg.to_dict()}


def _outdir(cfg: RunConfig, command: str) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    _write_json(out / "config.json", _meta(cfg, command))
    return out


def _universe(cfg: RunConfig) -> tuple[list[PriceSeries], list[tuple[str, str]]]:
    if cfg.universe is None:
        raise UsageError("--universe is required")
    try:
        return load_universe(cfg.universe)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None


def _params(cfg: RunConfig) -> StrategyParams:
    return StrategyParams(cfg.short_window, cfg.long_window, cfg.band_window, cfg.band_k)


# -- commands ---------------------------------------------------------------


def synth_universe(cfg: RunConfig) -> list[PriceSeries]:
    """Series for ``cmd_synth``; symbol ``i`` uses seed ``SeedSequence([seed, i])``."""
    prefix = SYNTH_PREFIX[cfg.kind]
    width = max(4, len(str(cfg.count - 1)))
    out = []
    for i in range(cfg.count):
        seed = int(np.random.SeedSequence([cfg.seed, i]).generate_state(1, np.uint64)[0])
        sym = f"{prefix}{i:0{width}d}"
        if cfg.kind == "randomwalk":
            s = synth_random_walk(cfg.n, seed, cfg.sigma, cfg.p0, symbol=sym, start=cfg.start)
        elif cfg.kind == "ou":
            s = synth_ou(cfg.n, seed, cfg.theta, cfg.mu, cfg.sigma, symbol=sym, start=cfg.start)
        else:
            s = synth_persistent(cfg.n, seed, cfg.phi, cfg.sigma, cfg.p0, symbol=sym, start=cfg.start)
        out.append(s)
    return out


def cmd_synth(cfg: RunConfig) -> list[Path]:
    out = _outdir(cfg, "synth")
    return [write_csv(s, out / f"{s.symbol}.csv") for s in synth_universe(cfg)]


def _run(cfg: RunConfig):
    series, failed = _universe(cfg)
    if not series:
        raise UsageError(f"no readable series in {cfg.universe}")
    try:
        run = run_universe(series, cfg.split_date, _params(cfg), cfg.workers)
    except DataError as exc:
        raise UsageError(str(exc)) from None
    return run.rows, failed + run.skipped


def cmd_pipeline(cfg: RunConfig) -> dict:
    rows, skipped = _run(cfg)
    out = _outdir(cfg, "pipeline")
    _write_csv(
        out / "rows.csv",
        ("symbol", "h", "r_momentum", "r_meanrev"),
        [(r.symbol, _f(r.h), _f(r.r_momentum), _f(r.r_meanrev)) for r in rows],
    )
    finals = {
        "momentum": [r.r_momentum for r in rows],
        "meanrev": [r.r_meanrev for r in rows],
        "gated": [gated_return(r, cfg.boundary) for r in rows],
    }
    report = {
        **_meta(cfg, "pipeline"),
        "boundary": cfg.boundary,
        "n_symbols": len(rows),
        "n_skipped": len(skipped),
        "zero_trade": {
            "momentum": sum(r.trades_momentum == 0 for r in rows),
            "meanrev": sum(r.trades_meanrev == 0 for r in rows),
        },
        **{k: summary(v).as_dict() for k, v in finals.items()},
    }
    _write_json(out / "summary.json", report)

    # one shared range so the three final-return histograms overlay
    allv = np.concatenate([np.asarray(v) for v in finals.values()])
    rng = (float(allv.min()), float(allv.max()))
    bins = cfg.hist_bins if rng[1] > rng[0] else 1
    for name, values in finals.items():
        h = histogram(values, bins, rng)
        _write_csv(out / f"hist_{name}.csv", ("bin_left", "bin_right", "count"),
                   [(_f(a), _f(b), c) for a, b, c in h.rows()])
    for name in ("momentum", "meanrev"):
        trades = [x for r in rows for x in getattr(r, f"trade_returns_{name}")]
        if trades:
            h = histogram(trades, cfg.hist_bins if max(trades) > min(trades) else 1)
            rows_out = [(_f(a), _f(b), c) for a, b, c in h.rows()]
        else:
            rows_out = []
        _write_csv(out / f"hist_trades_{name}.csv", ("bin_left", "bin_right", "count"), rows_out)
    _write_csv(out / "skipped.csv", ("symbol", "reason"), skipped)
    return report


def cmd_sweep(cfg: RunConfig) -> list:
    rows, skipped = _run(cfg)
    out = _outdir(cfg, "sweep")
    try:
        grid = default_grid(cfg.grid_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    points = sweep(rows, grid)
    _write_csv(
        out / "sweep.csv",
        ("boundary", "mean", "median", "std", "n"),
        [(_f(p.boundary), _f(p.stats.mean), _f(p.stats.median), _f(p.stats.std), p.stats.n)
         for p in points],
    )
    _write_csv(out / "skipped.csv", ("symbol", "reason"), skipped)
    return points


def _overlap(a_lo, a_hi, b_lo, b_hi) -> bool:
    """Closed date intervals, ``None`` meaning unbounded."""
    return (a_lo is None or b_hi is None or a_lo <= b_hi) and (b_lo is None or a_hi is None or b_lo <= a_hi)


def _restrict(series: list[PriceSeries], lo, hi, skipped: list) -> list[PriceSeries]:
    kept = []
    for s in series:
        try:
            kept.append(s.between(lo, hi))
        except DataError as exc:
            skipped.append((s.symbol, str(exc)))
    return kept


def _qtable_path(cfg: RunConfig) -> Path:
    return Path(cfg.qtable) if cfg.qtable else Path(cfg.out) / "qtable.json"


def cmd_qtrain(cfg: RunConfig) -> QTable:
    if (cfg.eval_start or cfg.eval_end) and _overlap(cfg.train_start, cfg.train_end, cfg.eval_start, cfg.eval_end):
        raise UsageError("training and evaluation date ranges overlap")
    series, skipped = _universe(cfg)
    series = _restrict(series, cfg.train_start, cfg.train_end, skipped)
    spec = StateSpec(cfg.short_window, cfg.long_window, cfg.bins_per_dim)
    hyper = Hyperparams(cfg.alpha_value, cfg.gamma, cfg.update, cfg.epsilon, cfg.t_threshold, cfg.n_min, cfg.seed)
    try:
        table = train(series, spec, hyper)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(cfg, "qtrain")
    doc = json.loads(table.to_json())
    doc["meta"] = _meta(cfg, "qtrain")
    atomic_write_text(_qtable_path(cfg), json.dumps(doc, indent=1, allow_nan=False) + "\n")
    _write_csv(out / "skipped.csv", ("symbol", "reason"), skipped)
    return table


def cmd_qeval(cfg: RunConfig) -> dict:
    path = _qtable_path(cfg)
    if not path.is_file():
        raise UsageError(f"missing qtable: {path}")
    table = QTable.from_json(path.read_text(encoding="utf-8"))
    ranged = cfg.eval_start is not None or cfg.eval_end is not None
    if ranged and table.train_range and _overlap(cfg.eval_start, cfg.eval_end, *table.train_range):
        lo, hi = table.train_range
        raise UsageError(f"evaluation range overlaps the training range {lo}..{hi}")
    series, skipped = _universe(cfg)
    series = _restrict(series, cfg.eval_start, cfg.eval_end, skipped)
    results, daily = {}, []
    for s in series:
        try:
            recs = {m: evaluate(table, s, m) for m in (PolicyMode.RESTRICTED, PolicyMode.FORCED)}
        except ValueError as exc:
            skipped.append((s.symbol, str(exc)))
            continue
        results[s.symbol] = {
            m.value: {
                "sharpe": rec.sharpe,
                "degenerate": rec.degenerate,
                "mean_daily_return": float(np.mean(rec.daily_returns)),
                "days": len(rec.daily_returns),
                "action_counts": rec.action_counts,
            }
            for m, rec in recs.items()
        }
        for m, rec in recs.items():
            daily += [(s.symbol, m.value, d.isoformat(), a.value, _f(r))
                      for d, a, r in zip(rec.dates, rec.actions, rec.daily_returns)]
    if not results:
        raise UsageError("no series could be evaluated")
    out = _outdir(cfg, "qeval")
    report = {
        **_meta(cfg, "qeval"),
        "qtable": str(path),
        "train_range": [d.isoformat() for d in table.train_range] if table.train_range else None,
        "results": results,
        "n_skipped": len(skipped),
    }
    _write_json(out / "qeval.json", report)
    _write_csv(out / "qeval_daily.csv", ("symbol", "mode", "date", "action", "return"), daily)
    _write_csv(out / "skipped.csv", ("symbol", "reason"), skipped)
    return report


COMMANDS = {
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
    "sweep": cmd_sweep,
    "qtrain": cmd_qtrain,
    "qeval": cmd_qeval,
}


# -- argument parsing -------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for f in dataclasses.fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        common.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    common.add_argument("--config", dest="config_file", default=None, help="flat key = value file")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="hurstgate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)}
    try:
        file_values = read_config_file(args.config_file) if args.config_file else {}
        cfg = resolve(file_values, overrides)
        COMMANDS[args.command](cfg)
    except (ConfigError, UsageError, OSError) as exc:
        print(f"hurstgate {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
