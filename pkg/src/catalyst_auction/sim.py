"""Agent-based simulation lab for comparing auction mechanism variants.

Scripted bidder populations run against the traditional rule and both
catalyst/recipient arrangements under identical seeds, producing price
curves, engagement metrics (bid counts and instance-of-last-bid), transfer
ledgers, and a Monte Carlo check of the symmetric catalyst-chance model.

Runs are deterministic: a scenario plus a seed always produces the same
serialized result.  Turn order is round-robin over the population after a
single seed-controlled shuffle, and every agent draws from its own derived
random stream.
"""

from __future__ import annotations

import json
import math
import random
import statistics
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

from .core import (
    AuctionError,
    AuctionState,
    BidEntry,
    RuleConfig,
    Settlement,
    TransferEvent,
    Variant,
    new_auction,
    replay,
)
from .eventlog import config_from_doc, config_to_doc


class ScenarioInvalid(AuctionError):
    """A scenario violates one of its invariants."""


class DegenerateRoles(AuctionError):
    """Catalyst probability is undefined for fewer than two participants."""


# --------------------------------------------------------------------------
# Policies


class PolicyKind(str, Enum):
    VALUATION = "valuation"
    RECIPIENT_SEEKER = "recipient_seeker"
    CATALYST_AVOIDER = "catalyst_avoider"
    SCRIPTED = "scripted"


NEVER_IMPATIENT = 10**9


@dataclass(frozen=True)
class AgentPolicy:
    """Behavioral archetype plus its numeric parameters.

    ``valuation`` caps every non-scripted bid.  ``aggressiveness`` is the
    per-turn probability of a voluntary (non-forced) bid and also scales how
    far above the minimum a valuation bidder jumps.  ``patience`` is the
    maximum number of instances an agent tolerates since its last own bid
    before it stops volunteering bids.  ``script`` is the fixed bid list of a
    scripted agent.
    """

    kind: PolicyKind
    valuation: int = 0
    aggressiveness: float = 1.0
    patience: int = NEVER_IMPATIENT
    script: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        object.__setattr__(self, "script", tuple(self.script))

    def validate(self) -> None:
        if self.kind is PolicyKind.SCRIPTED:
            if any(a >= b for a, b in zip(self.script, self.script[1:])):
                raise ScenarioInvalid("scripted amounts must be strictly increasing")
        else:
            if self.valuation <= 0:
                raise ScenarioInvalid(f"{self.kind.value} policy needs a positive valuation")
        if not (0.0 <= self.aggressiveness <= 1.0):
            raise ScenarioInvalid("aggressiveness must lie in [0, 1]")
        if self.patience < 0:
            raise ScenarioInvalid("patience must be non-negative")


def _next_catalyst_bidder(state: AuctionState) -> Optional[str]:
    """Who would occupy the catalyst seat right after one more bid."""
    cfg = state.config
    if cfg.variant is Variant.TRADITIONAL:
        return None
    t_after = state.latest_instance + 1
    if t_after < cfg.catalyst_index - 1:
        return None
    seat_after = min(cfg.catalyst_index, t_after)
    if seat_after <= cfg.recipient_index:
        return None
    current_position = seat_after - 1  # existing entries sink one position
    if 0 <= current_position <= state.latest_instance:
        return state.entries[current_position].bidder
    return None


class Agent:
    """One live participant: a policy plus its private random stream."""

    def __init__(self, name: str, policy: AgentPolicy, rng: random.Random):
        self.name = name
        self.policy = policy
        self.rng = rng
        self.script_position = 0
        self.bids_placed = 0
        self.last_bid_instance = -1

    # -- helpers ---------------------------------------------------------

    def _is_top_bidder(self, state: AuctionState) -> bool:
        return bool(state.entries) and state.entries[0].bidder == self.name

    def _may_bid_now(self, state: AuctionState) -> bool:
        return state.config.allow_self_outbid or not self._is_top_bidder(state)

    def _out_of_patience(self, state: AuctionState) -> bool:
        return state.latest_instance - self.last_bid_instance > self.policy.patience

    # -- decision --------------------------------------------------------

    def decide(self, state: AuctionState) -> Optional[int]:
        """Return a bid amount or None to pass.

        Any returned amount is legal for the engine: at least the current
        minimum, never above the agent's valuation, and never a forbidden
        self-outbid.
        """
        if not state.is_open:
            return None
        kind = self.policy.kind
        if kind is PolicyKind.SCRIPTED:
            return self._decide_scripted(state)
        minimum = state.min_next_bid()
        if minimum > self.policy.valuation or not self._may_bid_now(state):
            return None
        if kind is PolicyKind.VALUATION:
            return self._decide_valuation(state, minimum)
        if kind is PolicyKind.RECIPIENT_SEEKER:
            return self._decide_seeker(state, minimum)
        return self._decide_avoider(state, minimum)

    def _decide_scripted(self, state: AuctionState) -> Optional[int]:
        if self.script_position >= len(self.policy.script):
            return None
        amount = self.policy.script[self.script_position]
        if amount < state.min_next_bid() or not self._may_bid_now(state):
            return None
        self.script_position += 1
        return amount

    def _decide_valuation(self, state: AuctionState, minimum: int) -> Optional[int]:
        if self._is_top_bidder(state) or self._out_of_patience(state):
            return None
        if self.rng.random() >= self.policy.aggressiveness:
            return None
        # Jumps above the minimum stay on the scale of the current increment,
        # capped by the remaining headroom to the private valuation.
        top = state.entries[0].amount if state.entries else 0
        scale = min(self.policy.valuation - minimum, 4 * (minimum - top))
        jump = int(self.rng.random() * self.policy.aggressiveness * scale)
        return minimum + jump

    def _decide_seeker(self, state: AuctionState, minimum: int) -> Optional[int]:
        """Chase the recipient seat.

        A bid of its own lands the seeker at the recipient position exactly
        when the seat is position 0, or when one of its entries currently
        sits one position above the seat.  Otherwise it only volunteers an
        entry bid (to start drifting toward the seat) while it has no entry
        on the stretch between the top and the seat.
        """
        if state.config.variant is Variant.TRADITIONAL:
            return None
        r = state.config.recipient_index
        if r == 0:
            if not self._is_top_bidder(state):
                return minimum
            return None
        holds = [
            position
            for position, entry in enumerate(state.entries)
            if entry.bidder == self.name
        ]
        if r - 1 in holds:
            return minimum  # own bid pushes that entry onto the seat
        if any(position < r for position in holds) or self._out_of_patience(state):
            return None
        if self.rng.random() < self.policy.aggressiveness:
            return minimum
        return None

    def _decide_avoider(self, state: AuctionState, minimum: int) -> Optional[int]:
        roles = state.active_roles()
        threatened = (
            roles.catalyst is not None and roles.catalyst.bidder == self.name
        ) or _next_catalyst_bidder(state) == self.name
        if threatened:
            return minimum
        if self._out_of_patience(state):
            return None
        if self.rng.random() < self.policy.aggressiveness:
            return minimum
        return None


# --------------------------------------------------------------------------
# Scenarios


class StopKind(str, Enum):
    NO_BID_TIMEOUT = "no_bid_timeout"
    MAX_INSTANCES = "max_instances"


@dataclass(frozen=True)
class StopRule:
    """When a run ends: after ``value`` consecutive bid-free turns, or after
    ``value`` accepted bids."""

    kind: StopKind
    value: int

    def __post_init__(self):
        object.__setattr__(self, "kind", StopKind(self.kind))


@dataclass(frozen=True)
class PopulationGroup:
    policy: AgentPolicy
    count: int
    name: Optional[str] = None


@dataclass(frozen=True)
class Scenario:
    rules: RuleConfig
    population: tuple[PopulationGroup, ...]
    seed: int
    stop: StopRule = StopRule(StopKind.NO_BID_TIMEOUT, 100)

    def validate(self) -> None:
        self.rules.validate()
        total = sum(group.count for group in self.population)
        if total < 2:
            raise ScenarioInvalid(f"need at least 2 participants, got {total}")
        for group in self.population:
            if group.count < 1:
                raise ScenarioInvalid("population counts must be positive")
            group.policy.validate()
        if self.stop.value < 1:
            raise ScenarioInvalid("stop rule value must be at least 1")

    def participants(self) -> int:
        return sum(group.count for group in self.population)


def build_agents(scenario: Scenario) -> list[Agent]:
    """Expand population groups into named agents with derived rng streams."""
    agents = []
    index = 0
    for group in scenario.population:
        for _ in range(group.count):
            if group.name is not None and group.count == 1:
                name = group.name
            else:
                name = f"agent-{index:03d}"
            rng = random.Random(scenario.seed * 1_000_003 + index)
            agents.append(Agent(name, group.policy, rng))
            index += 1
    return agents


# --------------------------------------------------------------------------
# Runs


@dataclass(frozen=True)
class RunResult:
    """Everything one simulated auction produced."""

    price_curve: tuple[tuple[int, int], ...]
    final_price: int
    bid_count: int
    time_to_final: int
    transfer_ledger: tuple[TransferEvent, ...]
    settlement: Settlement
    per_agent: dict[str, tuple[int, int]] = field(default_factory=dict)

    def to_jsonable(self) -> dict:
        return {
            "price_curve": [list(point) for point in self.price_curve],
            "final_price": self.final_price,
            "bid_count": self.bid_count,
            "time_to_final": self.time_to_final,
            "transfer_ledger": [
                [t.at_instance, t.payer, t.payee, t.amount] for t in self.transfer_ledger
            ],
            "settlement": {
                "winner": self.settlement.winner,
                "winning_amount": self.settlement.winning_amount,
                "net_by_participant": dict(sorted(self.settlement.net_by_participant.items())),
            },
            "per_agent": {
                name: list(stats) for name, stats in sorted(self.per_agent.items())
            },
        }


MAX_TURNS = 1_000_000  # hard guard against runaway policies


def run_auction_sim(scenario: Scenario) -> RunResult:
    """Run one auction to completion under the scenario's stop rule."""
    result, _ = run_auction_sim_with_log(scenario)
    return result


def run_auction_sim_with_log(scenario: Scenario) -> tuple[RunResult, tuple[BidEntry, ...]]:
    """Like :func:`run_auction_sim` but also returns the raw bid log.

    The log lets callers replay the run through the engine as an
    independent check of the ledger.
    """
    scenario.validate()
    agents = build_agents(scenario)
    order = list(agents)
    random.Random(scenario.seed).shuffle(order)

    state = new_auction(scenario.rules)
    bid_log: list[BidEntry] = []
    price_curve: list[tuple[int, int]] = []
    quiet_turns = 0
    turn = 0
    while turn < MAX_TURNS:
        if scenario.stop.kind is StopKind.MAX_INSTANCES and len(bid_log) >= scenario.stop.value:
            break
        agent = order[turn % len(order)]
        turn += 1
        amount = agent.decide(state)
        if amount is None:
            quiet_turns += 1
            if (
                scenario.stop.kind is StopKind.NO_BID_TIMEOUT
                and quiet_turns >= scenario.stop.value
            ):
                break
            continue
        quiet_turns = 0
        state, events = state.place_bid(agent.name, amount)
        entry = events[0]
        bid_log.append(entry)
        price_curve.append((entry.instance, entry.amount))
        agent.bids_placed += 1
        agent.last_bid_instance = entry.instance

    ledger = state.settlement_transfers()
    state, settlement = state.close()
    per_agent: dict[str, tuple[int, int]] = {}
    for agent in agents:
        net = sum(t.amount for t in ledger if t.payee == agent.name) - sum(
            t.amount for t in ledger if t.payer == agent.name
        )
        per_agent[agent.name] = (agent.bids_placed, net)
    result = RunResult(
        price_curve=tuple(price_curve),
        final_price=price_curve[-1][1] if price_curve else 0,
        bid_count=len(bid_log),
        time_to_final=state.latest_instance,
        transfer_ledger=ledger,
        settlement=settlement,
        per_agent=per_agent,
    )
    return result, tuple(bid_log)


# --------------------------------------------------------------------------
# Variant comparison


VARIANT_ORDER = (Variant.TRADITIONAL, Variant.RECIPIENT_IS_HIGHEST, Variant.RECIPIENT_BETWEEN)


@dataclass(frozen=True)
class VariantSummary:
    variant: Variant
    seeds: int
    final_price_mean: float
    final_price_min: int
    final_price_max: int
    bid_count_mean: float
    bid_count_min: int
    bid_count_max: int
    time_to_final_mean: float
    time_to_final_min: int
    time_to_final_max: int


@dataclass(frozen=True)
class ComparisonReport:
    """Per-variant stats, per-seed curve points, and mean curves."""

    summaries: tuple[VariantSummary, ...]
    curves: tuple[tuple[str, int, int, int], ...]  # variant, seed, instance, amount
    mean_curves: dict[str, tuple[tuple[int, float], ...]]

    def to_jsonable(self) -> dict:
        return {
            "summaries": [
                {
                    "variant": s.variant.value,
                    "seeds": s.seeds,
                    "final_price": [s.final_price_mean, s.final_price_min, s.final_price_max],
                    "bid_count": [s.bid_count_mean, s.bid_count_min, s.bid_count_max],
                    "time_to_final": [
                        s.time_to_final_mean,
                        s.time_to_final_min,
                        s.time_to_final_max,
                    ],
                }
                for s in self.summaries
            ],
            "curves": [list(row) for row in self.curves],
            "mean_curves": {
                variant: [list(point) for point in points]
                for variant, points in self.mean_curves.items()
            },
        }


def variant_rules(base: RuleConfig, variant: Variant) -> RuleConfig:
    """The base rules re-targeted at another variant.

    The highest-bidder variant forces the recipient seat to 0; the other
    indexes carry over unchanged.
    """
    return replace(base, variant=variant)


def compare_variants(base: Scenario, seeds: Sequence[int]) -> ComparisonReport:
    """Run the same population under all three variants for every seed.

    The base rules must carry catalyst/recipient seats that are valid for
    the in-between variant (0 < recipient < catalyst), since all three
    configurations are derived from them.
    """
    if not seeds:
        raise ScenarioInvalid("need at least one seed")
    base.validate()
    summaries = []
    curve_rows: list[tuple[str, int, int, int]] = []
    mean_curves: dict[str, tuple[tuple[int, float], ...]] = {}
    for variant in VARIANT_ORDER:
        rules = variant_rules(base.rules, variant)
        try:
            rules.validate()
        except AuctionError as error:
            error.variant = variant.value
            raise
        results = []
        for seed in seeds:
            scenario = replace(base, rules=rules, seed=seed)
            try:
                result = run_auction_sim(scenario)
            except AuctionError as error:
                error.variant = variant.value
                error.seed = seed
                raise
            results.append(result)
            for instance, amount in result.price_curve:
                curve_rows.append((variant.value, seed, instance, amount))
        summaries.append(_summarize(variant, seeds, results))
        mean_curves[variant.value] = _mean_curve(results)
    return ComparisonReport(
        summaries=tuple(summaries), curves=tuple(curve_rows), mean_curves=mean_curves
    )


def _summarize(variant: Variant, seeds: Sequence[int], results: list[RunResult]) -> VariantSummary:
    finals = [r.final_price for r in results]
    counts = [r.bid_count for r in results]
    times = [r.time_to_final for r in results]
    return VariantSummary(
        variant=variant,
        seeds=len(seeds),
        final_price_mean=statistics.mean(finals),
        final_price_min=min(finals),
        final_price_max=max(finals),
        bid_count_mean=statistics.mean(counts),
        bid_count_min=min(counts),
        bid_count_max=max(counts),
        time_to_final_mean=statistics.mean(times),
        time_to_final_min=min(times),
        time_to_final_max=max(times),
    )


def _mean_curve(results: list[RunResult]) -> tuple[tuple[int, float], ...]:
    """Mean highest amount per instance over the runs that reached it."""
    longest = max((len(r.price_curve) for r in results), default=0)
    points = []
    for instance in range(longest):
        amounts = [
            r.price_curve[instance][1] for r in results if len(r.price_curve) > instance
        ]
        points.append((instance, statistics.mean(amounts)))
    return tuple(points)


# --------------------------------------------------------------------------
# Catalyst-chance Monte Carlo


def estimate_catalyst_probability(
    participants: int,
    trials: int,
    seed: int = 0,
    catalyst_position: Optional[int] = None,
) -> tuple[float, float]:
    """Estimate the chance one designated participant holds the catalyst seat.

    The model is symmetric, not strategic: each trial assigns the
    participants to final positions uniformly at random and checks who sits
    at the catalyst position, so the true probability is 1/participants for
    any seat choice.  Returns the estimate and its binomial standard error.
    """
    if participants < 2:
        raise DegenerateRoles(
            f"catalyst odds need at least 2 participants, got {participants}"
        )
    if trials < 1:
        raise ScenarioInvalid(f"trials must be positive, got {trials}")
    if catalyst_position is None:
        catalyst_position = participants - 1
    if not (0 <= catalyst_position < participants):
        raise ScenarioInvalid("catalyst_position must be a valid position index")
    rng = random.Random(seed)
    assignment = list(range(participants))
    hits = 0
    for _ in range(trials):
        rng.shuffle(assignment)
        if assignment[catalyst_position] == 0:
            hits += 1
    estimate = hits / trials
    stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
    return estimate, stderr


# --------------------------------------------------------------------------
# Scenario files and result output


def scenario_to_doc(scenario: Scenario) -> dict:
    return {
        "rules": {k: v for k, v in config_to_doc(scenario.rules).items() if k != "type"},
        "population": [
            {
                "policy": _policy_to_doc(group.policy),
                "count": group.count,
                **({"name": group.name} if group.name else {}),
            }
            for group in scenario.population
        ],
        "seed": scenario.seed,
        "stop": {"kind": scenario.stop.kind.value, "value": scenario.stop.value},
    }


def scenario_from_doc(doc: dict) -> Scenario:
    try:
        rules = config_from_doc(doc["rules"])
        population = tuple(
            PopulationGroup(
                policy=_policy_from_doc(entry["policy"]),
                count=entry.get("count", 1),
                name=entry.get("name"),
            )
            for entry in doc["population"]
        )
        stop_doc = doc.get("stop", {"kind": "no_bid_timeout", "value": 100})
        scenario = Scenario(
            rules=rules,
            population=population,
            seed=doc.get("seed", 0),
            stop=StopRule(StopKind(stop_doc["kind"]), stop_doc["value"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioInvalid(f"bad scenario document: {exc}") from exc
    return scenario


def _policy_to_doc(policy: AgentPolicy) -> dict:
    doc: dict = {"kind": policy.kind.value}
    if policy.kind is PolicyKind.SCRIPTED:
        doc["script"] = list(policy.script)
    else:
        doc["valuation"] = policy.valuation
        doc["aggressiveness"] = policy.aggressiveness
        if policy.patience != NEVER_IMPATIENT:
            doc["patience"] = policy.patience
    return doc


def _policy_from_doc(doc: dict) -> AgentPolicy:
    return AgentPolicy(
        kind=PolicyKind(doc["kind"]),
        valuation=doc.get("valuation", 0),
        aggressiveness=doc.get("aggressiveness", 1.0),
        patience=doc.get("patience", NEVER_IMPATIENT),
        script=tuple(doc.get("script", ())),
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    with Path(path).open(encoding="utf-8") as handle:
        return scenario_from_doc(json.load(handle))


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_doc(scenario), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _write_rows(path: Path, header: Sequence[str], rows, fmt: str) -> None:
    """Write rows as CSV or JSONL with stable byte-for-byte output."""
    with path.open("w", encoding="utf-8", newline="") as handle:
        if fmt == "csv":
            handle.write(",".join(header) + "\n")
            for row in rows:
                handle.write(",".join(str(cell) for cell in row) + "\n")
        else:
            for row in rows:
                doc = dict(zip(header, row))
                handle.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def write_run_outputs(result: RunResult, out_dir: Union[str, Path], fmt: str = "csv") -> list[Path]:
    """Write one run's curve, transfer ledger, and full result document.

    ``curve.*``   columns: instance, highest_amount
    ``transfers.*`` columns: at_instance, payer, payee, amount
    ``result.json`` the whole :class:`RunResult` as one document
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "jsonl"
    paths = [out / f"curve.{ext}", out / f"transfers.{ext}", out / "result.json"]
    _write_rows(paths[0], ("instance", "highest_amount"), result.price_curve, fmt)
    _write_rows(
        paths[1],
        ("at_instance", "payer", "payee", "amount"),
        [(t.at_instance, t.payer, t.payee, t.amount) for t in result.transfer_ledger],
        fmt,
    )
    paths[2].write_text(
        json.dumps(result.to_jsonable(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths


def write_comparison_outputs(
    report: ComparisonReport, out_dir: Union[str, Path], fmt: str = "csv"
) -> list[Path]:
    """Write comparison outputs.

    ``curves.*``      columns: variant, seed, instance, highest_amount
    ``mean_curves.*`` columns: variant, instance, mean_highest (6 decimals)
    ``summary.*``     one row per variant with mean/min/max of final_price,
                      bid_count, and time_to_final
    ``report.json``   the whole report as one document
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = "csv" if fmt == "csv" else "jsonl"
    curves_path = out / f"curves.{ext}"
    means_path = out / f"mean_curves.{ext}"
    summary_path = out / f"summary.{ext}"
    _write_rows(curves_path, ("variant", "seed", "instance", "highest_amount"), report.curves, fmt)
    mean_rows = [
        (variant, instance, f"{mean:.6f}")
        for variant, points in report.mean_curves.items()
        for instance, mean in points
    ]
    _write_rows(means_path, ("variant", "instance", "mean_highest"), mean_rows, fmt)
    summary_rows = [
        (
            s.variant.value,
            s.seeds,
            f"{s.final_price_mean:.6f}",
            s.final_price_min,
            s.final_price_max,
            f"{s.bid_count_mean:.6f}",
            s.bid_count_min,
            s.bid_count_max,
            f"{s.time_to_final_mean:.6f}",
            s.time_to_final_min,
            s.time_to_final_max,
        )
        for s in report.summaries
    ]
    _write_rows(
        summary_path,
        (
            "variant",
            "seeds",
            "final_price_mean",
            "final_price_min",
            "final_price_max",
            "bid_count_mean",
            "bid_count_min",
            "bid_count_max",
            "time_to_final_mean",
            "time_to_final_min",
            "time_to_final_max",
        ),
        summary_rows,
        fmt,
    )
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report.to_jsonable(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return [curves_path, means_path, summary_path, report_path]
