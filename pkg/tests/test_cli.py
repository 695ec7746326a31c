"""CLI behavior: subcommands, exit codes, output determinism."""

from __future__ import annotations

import json

import pytest

from catalyst_auction.cli import main, parse_seeds
from catalyst_auction.core import new_auction
from catalyst_auction.eventlog import PhaseRecord, write_log
from catalyst_auction.render import DEMO_BIDS, DEMO_CONFIG
from catalyst_auction.sim import save_scenario
from test_sim import mixed_scenario


def run_cli(*argv) -> int:
    return main(list(argv))


class TestParseSeeds:
    def test_forms(self):
        assert parse_seeds("7") == [7]
        assert parse_seeds("1,2,9") == [1, 2, 9]
        assert parse_seeds("1..5") == [1, 2, 3, 4, 5]
        assert parse_seeds("1..3,10") == [1, 2, 3, 10]

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_seeds("")
        with pytest.raises(ValueError):
            parse_seeds("5..1")


class TestDemoTable:
    def test_matches_golden_and_exits_zero(self, capsys):
        assert run_cli("demo-table") == 0
        out = capsys.readouterr().out
        assert "P3: {Person 2, 150}" in out
        assert out.strip().splitlines()[-1].endswith("Person 3")


class TestSimulate:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        scenario_path = tmp_path / "scenario.json"
        save_scenario(mixed_scenario(), scenario_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run_cli("simulate", "--scenario", str(scenario_path), "--seed", "7",
                       "--out", str(out_a)) == 0
        assert run_cli("simulate", "--scenario", str(scenario_path), "--seed", "7",
                       "--out", str(out_b)) == 0
        for name in ("curve.csv", "transfers.csv", "result.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_default_scenario(self, tmp_path, capsys):
        assert run_cli("simulate", "--scenario", "default", "--seed", "3",
                       "--out", str(tmp_path / "out")) == 0
        assert (tmp_path / "out" / "result.json").exists()

    def test_missing_scenario_is_runtime_error(self, tmp_path, capsys):
        assert run_cli("simulate", "--scenario", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path / "out")) == 1

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as excinfo:
            run_cli("simulate", "--bogus-flag")
        assert excinfo.value.code == 2


class TestCompare:
    def test_summary_row_counts(self, tmp_path, capsys):
        scenario_path = tmp_path / "scenario.json"
        save_scenario(mixed_scenario(), scenario_path)
        out = tmp_path / "cmp"
        assert run_cli("compare", "--scenario", str(scenario_path), "--seeds", "1..4",
                       "--out", str(out)) == 0
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 4
        curves = (out / "curves.csv").read_text().splitlines()[1:]
        seen = {tuple(line.split(",")[:2]) for line in curves}
        assert len(seen) == 12  # 3 variants x 4 seeds

    def test_jsonl_format(self, tmp_path, capsys):
        scenario_path = tmp_path / "scenario.json"
        save_scenario(mixed_scenario(), scenario_path)
        out = tmp_path / "cmp"
        assert run_cli("compare", "--scenario", str(scenario_path), "--seeds", "1,2",
                       "--out", str(out), "--format", "jsonl") == 0
        line = (out / "summary.jsonl").read_text().splitlines()[0]
        assert json.loads(line)["variant"] == "traditional"


class TestReplay:
    def test_prints_table_and_settlement(self, tmp_path, capsys):
        state = new_auction(DEMO_CONFIG)
        records = [PhaseRecord("running")]
        for bidder, amount in DEMO_BIDS:
            state, events = state.place_bid(bidder, amount)
            records.extend(events)
        log_path = tmp_path / "demo.log"
        write_log(log_path, DEMO_CONFIG, records)
        assert run_cli("replay", "--log", str(log_path)) == 0
        out = capsys.readouterr().out
        assert "P0: {Person 3, 400}" in out
        assert "winner: Person 3 at 400" in out
        assert "Person 1" in out and "-10" in out

    def test_corrupt_log_exits_one(self, tmp_path, capsys):
        log_path = tmp_path / "bad.log"
        log_path.write_text("garbage\n", encoding="utf-8")
        assert run_cli("replay", "--log", str(log_path)) == 1

    def test_round_trip_with_simulate_outputs(self, tmp_path, capsys):
        # Every file the CLI writes parses back through the same binary's
        # machinery: scenario in, log-independent outputs out.
        scenario_path = tmp_path / "scenario.json"
        save_scenario(mixed_scenario(), scenario_path)
        out = tmp_path / "out"
        assert run_cli("simulate", "--scenario", str(scenario_path),
                       "--out", str(out)) == 0
        result = json.loads((out / "result.json").read_text())
        curve_lines = (out / "curve.csv").read_text().splitlines()[1:]
        assert len(curve_lines) == result["bid_count"]
