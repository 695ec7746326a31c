"""Command-line entry point: simulate, compare, serve, replay, demo-table."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .core import AuctionError, BidEntry, replay
from .eventlog import PhaseRecord, read_log
from .render import demo_table, format_rows, render_log_trace
from .sim import (
    compare_variants,
    load_scenario,
    run_auction_sim,
    scenario_from_doc,
    write_comparison_outputs,
    write_run_outputs,
)


def _data_text(name: str) -> str:
    return resources.files("catalyst_auction").joinpath(f"data/{name}").read_text(encoding="utf-8")


def resolve_scenario(source: str):
    """A scenario path, or the literal ``default`` for the built-in one."""
    if source == "default":
        return scenario_from_doc(json.loads(_data_text("default_scenario.json")))
    return load_scenario(source)


def parse_seeds(spec: str) -> list[int]:
    """Seed list syntax: ``7``, ``1,2,9``, or an inclusive range ``1..20``."""
    seeds: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            low, high = part.split("..", 1)
            start, end = int(low), int(high)
            if end < start:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(start, end + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in {spec!r}")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catalyst-auction",
        description="Ascending auctions with catalyst/recipient side payments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run one seeded auction simulation")
    simulate.add_argument("--scenario", required=True,
                          help="scenario JSON path, or 'default' for the built-in one")
    simulate.add_argument("--seed", type=int, default=None,
                          help="override the scenario's seed")
    simulate.add_argument("--out", default="sim-out", help="output directory")
    simulate.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    compare = sub.add_parser("compare", help="run all three variants over many seeds")
    compare.add_argument("--scenario", required=True,
                         help="scenario JSON path, or 'default' for the built-in one")
    compare.add_argument("--seeds", required=True,
                         help="seed list: '7', '1,2,9', or inclusive range '1..20'")
    compare.add_argument("--out", default="compare-out", help="output directory")
    compare.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    serve = sub.add_parser("serve", help="run the live auction-room service")
    serve.add_argument("--listen", default=None,
                       help="host:port (env AUCTION_LISTEN, default 127.0.0.1:8765)")
    serve.add_argument("--log-dir", default=None,
                       help="room log directory (env AUCTION_LOG_DIR, default ./auction-logs)")
    serve.add_argument("--max-clients", type=int, default=None,
                       help="members per room (env AUCTION_MAX_CLIENTS, default 64)")

    rep = sub.add_parser("replay", help="print the position table and settlement of a log")
    rep.add_argument("--log", required=True, help="event log path")

    sub.add_parser("demo-table", help="print the built-in demonstration table")
    return parser


def cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    result = run_auction_sim(scenario)
    paths = write_run_outputs(result, args.out, fmt=args.format)
    winner = result.settlement.winner or "nobody"
    print(
        f"seed {scenario.seed}: {result.bid_count} bids, final price "
        f"{result.final_price}, winner {winner}"
    )
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_compare(args) -> int:
    scenario = resolve_scenario(args.scenario)
    seeds = parse_seeds(args.seeds)
    report = compare_variants(scenario, seeds)
    paths = write_comparison_outputs(report, args.out, fmt=args.format)
    for summary in report.summaries:
        print(
            f"{summary.variant.value:22s} final mean {summary.final_price_mean:10.1f}  "
            f"bids mean {summary.bid_count_mean:6.1f}  "
            f"time mean {summary.time_to_final_mean:6.1f}"
        )
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import DEFAULT_LISTEN, ENV_LISTEN, create_app
    import os

    listen = args.listen or os.environ.get(ENV_LISTEN, DEFAULT_LISTEN)
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"--listen must be host:port, got {listen!r}")
    app = create_app(log_dir=args.log_dir, max_clients=args.max_clients)
    uvicorn.run(app, host=host, port=int(port), log_level="info")
    return 0


def cmd_replay(args) -> int:
    config, records = read_log(args.log)
    bids = [record for record in records if isinstance(record, BidEntry)]
    phases = [record.value for record in records if isinstance(record, PhaseRecord)]
    if bids:
        print(render_log_trace(config, bids))
    else:
        print(format_rows([]))
    state = replay(bids, config)
    print()
    print(f"phase: {phases[-1] if phases else 'lobby'}")
    _, settlement = state.close()
    winner = settlement.winner or "nobody"
    print(f"winner: {winner} at {settlement.winning_amount}")
    if settlement.net_by_participant:
        print("net by participant (positive receives):")
        for participant, net in sorted(settlement.net_by_participant.items()):
            print(f"  {participant:16s} {net:+d}")
    return 0


def cmd_demo_table(_args) -> int:
    table = demo_table() + "\n"
    print(table, end="")
    if table != _data_text("demo_table.txt"):
        print("demonstration table diverged from the golden file", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "serve": cmd_serve,
    "replay": cmd_replay,
    "demo-table": cmd_demo_table,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (AuctionError, OSError, ValueError, json.JSONDecodeError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
