import csv
import datetime as dt
import json

import pytest

from hurstgate.cli import main
from hurstgate.config import ConfigError, RunConfig, read_config_file, resolve
from hurstgate.marketdata import load_universe, write_csv
from hurstgate.selector import gated_return, run_universe
from hurstgate.marketdata import synth_random_walk
from hurstgate.stats import summary


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def universe(tmp_path):
    d = tmp_path / "uni"
    assert main(["synth", "--out", str(d), "--count", "6", "--n", "400", "--sigma", "0.015", "--seed", "3"]) == 0
    return d


class TestSynth:
    def test_files_and_config(self, universe):
        files = sorted(p.name for p in universe.glob("*.csv"))
        assert files == [f"RW{i:04d}.csv" for i in range(6)]
        meta = json.loads((universe / "config.json").read_text())
        assert meta["command"] == "synth" and meta["config"]["count"] == 6

    def test_rerun_identical_bytes(self, universe, tmp_path):
        again = tmp_path / "again"
        main(["synth", "--out", str(again), "--count", "6", "--n", "400", "--sigma", "0.015", "--seed", "3"])
        for p in universe.glob("*.csv"):
            assert (again / p.name).read_bytes() == p.read_bytes()

    def test_kinds(self, tmp_path):
        for kind, prefix in (("ou", "OU"), ("persistent", "PS")):
            out = tmp_path / kind
            assert main(["synth", "--kind", kind, "--out", str(out), "--count", "2"]) == 0
            assert (out / f"{prefix}0000.csv").is_file()

    def test_zero_count(self, tmp_path, capsys):
        assert main(["synth", "--out", str(tmp_path / "x"), "--count", "0"]) == 2
        assert "count" in capsys.readouterr().err


class TestPipeline:
    def test_matches_library(self, universe, tmp_path):
        out = tmp_path / "p"
        assert main(["pipeline", "--universe", str(universe), "--out", str(out)]) == 0
        series, _ = load_universe(universe)
        lib = run_universe(series, RunConfig().split_date).rows
        rows = read_rows(out / "rows.csv")
        assert [r["symbol"] for r in rows] == [r.symbol for r in lib]
        for got, want in zip(rows, lib):
            assert float(got["h"]) == want.h
            assert float(got["r_momentum"]) == want.r_momentum
            assert float(got["r_meanrev"]) == want.r_meanrev
        report = json.loads((out / "summary.json").read_text())
        assert report["gated"] == summary([gated_return(r, 0.5) for r in lib]).as_dict()
        assert report["n_symbols"] == 6 and report["n_skipped"] == 0
        for name in ("momentum", "meanrev", "gated"):
            counts = [int(r["count"]) for r in read_rows(out / f"hist_{name}.csv")]
            assert sum(counts) == 6

    def test_single_symbol(self, tmp_path):
        d = tmp_path / "one"
        d.mkdir()
        write_csv(synth_random_walk(252, 9, 0.02, symbol="ONE"), d / "ONE.csv")
        assert main(["pipeline", "--universe", str(d), "--out", str(tmp_path / "o")]) == 0
        report = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert report["gated"]["degenerate"] and report["gated"]["n"] == 1

    def test_missing_universe(self, tmp_path, capsys):
        assert main(["pipeline", "--universe", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_file_is_skipped(self, universe, tmp_path):
        (universe / "BAD.csv").write_text("date,close\n2021-01-04,-1\n")
        assert main(["pipeline", "--universe", str(universe), "--out", str(tmp_path / "o")]) == 0
        skipped = read_rows(tmp_path / "o" / "skipped.csv")
        assert [r["symbol"] for r in skipped] == ["BAD"]


class TestSweep:
    def test_endpoints(self, universe, tmp_path):
        out = tmp_path / "s"
        assert main(["sweep", "--universe", str(universe), "--out", str(out)]) == 0
        rows = read_rows(out / "sweep.csv")
        assert len(rows) == 101
        lib = run_universe(load_universe(universe)[0], RunConfig().split_date).rows
        first, last = summary([r.r_momentum for r in lib]), summary([r.r_meanrev for r in lib])
        assert float(rows[0]["mean"]) == first.mean and float(rows[0]["std"]) == first.std
        assert float(rows[-1]["mean"]) == last.mean and float(rows[-1]["median"]) == last.median

    def test_bad_step(self, universe, tmp_path):
        assert main(["sweep", "--universe", str(universe), "--out", str(tmp_path / "s"), "--grid-step", "0.3"]) == 2


class TestQ:
    def _train(self, universe, out, qtable=None):
        args = ["qtrain", "--universe", str(universe), "--out", str(out),
                "--train-end", "2021-08-31", "--eval-start", "2021-09-01"]
        if qtable:
            args += ["--qtable", str(qtable)]
        return main(args)

    def test_train_then_eval(self, universe, tmp_path):
        out = tmp_path / "q"
        assert self._train(universe, out) == 0
        doc = json.loads((out / "qtable.json").read_text())
        assert doc["train_range"][1] <= "2021-08-31"
        assert main(["qeval", "--universe", str(universe), "--out", str(out), "--eval-start", "2021-09-01"]) == 0
        report = json.loads((out / "qeval.json").read_text())
        assert len(report["results"]) == 6
        for res in report["results"].values():
            assert set(res) == {"restricted", "forced"}
            forced = res["forced"]["action_counts"]
            assert forced["abstain"] == 0 and sum(forced.values()) == res["forced"]["days"]

    def test_same_seed_same_bytes(self, universe, tmp_path):
        q = tmp_path / "q.json"
        self._train(universe, tmp_path / "out", q)
        first = q.read_bytes()
        self._train(universe, tmp_path / "out", q)
        assert q.read_bytes() == first

    def test_overlap_rejected(self, universe, tmp_path):
        args = ["qtrain", "--universe", str(universe), "--out", str(tmp_path / "q"),
                "--train-end", "2021-09-30", "--eval-start", "2021-09-01"]
        assert main(args) == 2

    def test_eval_overlapping_training(self, universe, tmp_path, capsys):
        out = tmp_path / "q"
        self._train(universe, out)
        assert main(["qeval", "--universe", str(universe), "--out", str(out), "--eval-start", "2021-06-01"]) == 2
        assert "overlap" in capsys.readouterr().err

    def test_missing_qtable(self, universe, tmp_path, capsys):
        assert main(["qeval", "--universe", str(universe), "--qtable", str(tmp_path / "none.json")]) == 2
        assert "missing qtable" in capsys.readouterr().err


class TestConfig:
    def test_precedence(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\nboundary = 0.4\nband-k = 3\nsplit_date = 2021-03-01\n")
        vals = read_config_file(f)
        assert resolve(vals).boundary == 0.4
        cfg = resolve(vals, {"boundary": "0.6", "seed": None})
        assert cfg.boundary == 0.6 and cfg.band_k == 3.0 and cfg.seed == 0
        assert cfg.split_date == dt.date(2021, 3, 1)

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("bogus = 1\n")
        with pytest.raises(ConfigError, match="unknown"):
            read_config_file(f)
        assert main(["synth", "--config", str(f), "--out", str(tmp_path / "x")]) == 2

    @pytest.mark.parametrize("kv", [{"boundary": "1.5"}, {"alpha": "0"}, {"alpha": "fast"},
                                    {"short_window": "10"}, {"gamma": "1"}, {"seed": "x"}])
    def test_invalid(self, kv):
        with pytest.raises(ConfigError):
            resolve(overrides=kv)

    def test_cli_file_and_flag(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("count = 2\nn = 100\n")
        out = tmp_path / "u"
        assert main(["synth", "--config", str(f), "--count", "3", "--out", str(out)]) == 0
        meta = json.loads((out / "config.json").read_text())["config"]
        assert meta["count"] == 3 and meta["n"] == 100
