"""Event-sourced engine for ascending auctions with catalyst/recipient payments.

The auction keeps a dynamic position list: every accepted bid becomes the
newest entry at position 0 and pushes all older entries one position deeper.
Positions never need per-entry mutation because they follow directly from

    position = latest_instance - bid_instance

where ``bid_instance`` is the 0-based sequence number at which a bid was
placed and ``latest_instance`` is the sequence number of the newest bid.

Two roles are read off the list.  The *recipient* sits at a configured
position ``r``; the *catalyst* sits at a configured deeper position ``c`` and
owes the recipient ``alpha`` times its own listed amount.  While the list is
still shorter than ``c`` the catalyst seat clamps to the deepest entry once
the list has at least ``c`` entries (i.e. once ``latest_instance >= c - 1``).
A traditional highest-bidder-wins auction is the degenerate configuration
with no roles at all.

Everything here is pure: operations map ``(state, input)`` to
``(state, output)`` without mutation, and the whole auction is a fold of
bid events, so any state can be rebuilt by :func:`replay`.

Money is integer minor units throughout; ``alpha`` is an exact
:class:`fractions.Fraction` and transfer amounts round half to even, so
ledgers balance exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence, Union


# --------------------------------------------------------------------------
# Errors


class AuctionError(Exception):
    """Base class for auction rule violations."""


class ConfigInvalid(AuctionError):
    """A rule configuration violates one of its invariants."""


class OutOfRange(AuctionError):
    """A position/instance argument lies outside the valid range."""


class AuctionClosed(AuctionError):
    """Operation requires an open auction."""


class BidTooLow(AuctionError):
    """Bid is below the required minimum (carried in ``required_minimum``)."""

    def __init__(self, amount: int, required_minimum: int):
        super().__init__(f"bid of {amount} is below the required minimum {required_minimum}")
        self.amount = amount
        self.required_minimum = required_minimum


class SelfOutbidForbidden(AuctionError):
    """The current highest bidder may not outbid itself under this config."""


class LogCorrupt(AuctionError):
    """An event log line failed to parse (1-based ``line_no`` attached)."""

    def __init__(self, line_no: int, detail: str):
        super().__init__(f"log corrupt at line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


# --------------------------------------------------------------------------
# Configuration


class Variant(str, Enum):
    """Which payment arrangement the auction runs."""

    TRADITIONAL = "traditional"
    RECIPIENT_IS_HIGHEST = "recipient_is_highest"
    RECIPIENT_BETWEEN = "recipient_between"


class SettlementMode(str, Enum):
    """When catalyst payments accrue: on every bid, or once from the final list."""

    PER_EVENT_ACCRUAL = "per_event_accrual"
    FINAL_STATE_ONLY = "final_state_only"


def _coerce_alpha(value: Union[Fraction, int, float, str]) -> Fraction:
    """Turn a user-supplied alpha into an exact Fraction.

    Floats go through their shortest decimal repr, so 0.1 means exactly 1/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigInvalid("alpha must be a number, not a bool")
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigInvalid(f"alpha not parseable as a rational: {value!r}") from exc


@dataclass(frozen=True)
class RuleConfig:
    """Mechanism parameters for one auction.

    ``increment_schedule`` is a sequence of ``(from_instance, min_increment)``
    steps, non-decreasing in ``from_instance`` and starting at 0; the step in
    force for a bid is the last one whose ``from_instance`` is not above that
    bid's instance number.
    """

    variant: Variant = Variant.TRADITIONAL
    alpha: Fraction = Fraction(1, 10)
    catalyst_index: int = 0
    recipient_index: int = 0
    opening_bid: int = 100
    increment_schedule: tuple[tuple[int, int], ...] = ((0, 50),)
    settlement_mode: SettlementMode = SettlementMode.PER_EVENT_ACCRUAL
    allow_self_outbid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "settlement_mode", SettlementMode(self.settlement_mode))
        object.__setattr__(self, "alpha", _coerce_alpha(self.alpha))
        object.__setattr__(
            self,
            "increment_schedule",
            tuple((int(f), int(m)) for f, m in self.increment_schedule),
        )
        if self.variant is Variant.RECIPIENT_IS_HIGHEST:
            object.__setattr__(self, "recipient_index", 0)

    def validate(self) -> None:
        """Raise :class:`ConfigInvalid` naming the first violated invariant."""
        if not (0 < self.alpha <= 1):
            raise ConfigInvalid(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("catalyst_index", "recipient_index", "opening_bid"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigInvalid(f"{name} must be an integer, got {value!r}")
        if self.catalyst_index < 0 or self.recipient_index < 0:
            raise ConfigInvalid("position indexes must be non-negative")
        if self.opening_bid <= 0:
            raise ConfigInvalid(f"opening_bid must be positive, got {self.opening_bid}")
        if self.variant is not Variant.TRADITIONAL:
            if self.catalyst_index <= self.recipient_index:
                raise ConfigInvalid(
                    "catalyst_index must be strictly greater than recipient_index "
                    f"({self.catalyst_index} <= {self.recipient_index})"
                )
            if self.variant is Variant.RECIPIENT_BETWEEN and self.recipient_index == 0:
                raise ConfigInvalid(
                    "recipient_index must be strictly between 0 and catalyst_index "
                    "for the in-between variant"
                )
        if not self.increment_schedule:
            raise ConfigInvalid("increment_schedule must not be empty")
        if self.increment_schedule[0][0] != 0:
            raise ConfigInvalid("first increment step must start at instance 0")
        previous = -1
        for from_instance, min_increment in self.increment_schedule:
            if from_instance < previous:
                raise ConfigInvalid("increment steps must be non-decreasing in from_instance")
            if min_increment <= 0:
                raise ConfigInvalid(f"min_increment must be positive, got {min_increment}")
            previous = from_instance

    def min_increment_at(self, instance: int) -> int:
        """Minimum increment in force for a bid placed at ``instance``."""
        if instance < 0:
            raise OutOfRange(f"instance must be non-negative, got {instance}")
        chosen = self.increment_schedule[0][1]
        for from_instance, min_increment in self.increment_schedule:
            if from_instance > instance:
                break
            chosen = min_increment
        return chosen


# --------------------------------------------------------------------------
# Events and state


@dataclass(frozen=True)
class BidEntry:
    """One bid: who, how much, and the instance at which it was placed."""

    bidder: str
    amount: int
    instance: int

    def __post_init__(self):
        if not isinstance(self.bidder, str) or not self.bidder:
            raise ValueError(f"bidder must be a non-empty string, got {self.bidder!r}")
        if not isinstance(self.amount, int) or isinstance(self.amount, bool) or self.amount <= 0:
            raise ValueError(f"amount must be a positive integer, got {self.amount!r}")
        if not isinstance(self.instance, int) or self.instance < 0:
            raise ValueError(f"instance must be a non-negative integer, got {self.instance!r}")


@dataclass(frozen=True)
class TransferEvent:
    """A catalyst-to-recipient payment triggered at ``at_instance``."""

    at_instance: int
    payer: str
    payee: str
    amount: int

    def __post_init__(self):
        if self.amount < 0:
            raise ValueError(f"transfer amount must be non-negative, got {self.amount}")


class RoleHolder(NamedTuple):
    """A participant currently occupying a role position."""

    bidder: str
    position: int
    amount: int


@dataclass(frozen=True)
class RoleAssignment:
    """Catalyst/recipient occupancy for one state; either may be absent."""

    catalyst: Optional[RoleHolder] = None
    recipient: Optional[RoleHolder] = None


class AuctionStatus(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True)
class Settlement:
    """Close-time accounting.

    ``net_by_participant`` is signed cash flow per participant: positive
    means money received, negative means money owed.  The winner's bid
    obligation enters negatively; every transfer enters as ``-amount`` for
    the payer and ``+amount`` for the payee, so the transfer component sums
    to zero across all participants.
    """

    winner: Optional[str]
    winning_amount: int
    net_by_participant: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class AuctionState:
    """Immutable snapshot of a running auction.

    ``entries`` is ordered newest first, so the index of an entry in the
    tuple is exactly its position id.
    """

    config: RuleConfig
    entries: tuple[BidEntry, ...] = ()
    transfers: tuple[TransferEvent, ...] = ()
    status: AuctionStatus = AuctionStatus.OPEN

    @property
    def latest_instance(self) -> int:
        """0-based instance of the newest bid; -1 while no bids exist."""
        return len(self.entries) - 1

    @property
    def is_open(self) -> bool:
        return self.status is AuctionStatus.OPEN

    def min_next_bid(self) -> int:
        """Smallest acceptable next bid under the increment schedule."""
        if not self.is_open:
            raise AuctionClosed("auction is closed")
        if not self.entries:
            return self.config.opening_bid
        next_instance = self.latest_instance + 1
        return self.entries[0].amount + self.config.min_increment_at(next_instance)

    def active_roles(self) -> RoleAssignment:
        """Who currently occupies the catalyst and recipient positions.

        The recipient is the entry at the configured recipient position when
        that position exists.  The catalyst seat is ``min(c, latest_instance)``
        once at least ``c`` entries exist, and is never allowed to coincide
        with the recipient position.
        """
        cfg = self.config
        if cfg.variant is Variant.TRADITIONAL:
            return RoleAssignment()
        t = self.latest_instance
        recipient = None
        r = cfg.recipient_index
        if 0 <= r <= t:
            entry = self.entries[r]
            recipient = RoleHolder(entry.bidder, r, entry.amount)
        catalyst = None
        c = cfg.catalyst_index
        if t >= c - 1:
            pos = min(c, t)
            if pos > r:
                entry = self.entries[pos]
                catalyst = RoleHolder(entry.bidder, pos, entry.amount)
        return RoleAssignment(catalyst=catalyst, recipient=recipient)

    def transfer_for_instance(self) -> Optional[TransferEvent]:
        """The payment the current list implies, if both roles are occupied."""
        roles = self.active_roles()
        if roles.catalyst is None or roles.recipient is None:
            return None
        amount = round(self.config.alpha * roles.catalyst.amount)
        return TransferEvent(
            at_instance=self.latest_instance,
            payer=roles.catalyst.bidder,
            payee=roles.recipient.bidder,
            amount=amount,
        )

    def place_bid(self, bidder: str, amount: int) -> tuple["AuctionState", list["Event"]]:
        """Accept a bid, returning the new state and the emitted events.

        The first emitted event is always the new :class:`BidEntry`; a
        :class:`TransferEvent` follows when per-event accrual is on and the
        new list has both roles occupied.
        """
        if not self.is_open:
            raise AuctionClosed("auction is closed")
        if not isinstance(amount, int) or isinstance(amount, bool):
            raise TypeError(f"amount must be an integer, got {amount!r}")
        required = self.min_next_bid()
        if amount < required:
            raise BidTooLow(amount, required)
        if self.entries and not self.config.allow_self_outbid and bidder == self.entries[0].bidder:
            raise SelfOutbidForbidden(f"{bidder} already holds the highest bid")
        entry = BidEntry(bidder=bidder, amount=amount, instance=self.latest_instance + 1)
        state = replace(self, entries=(entry,) + self.entries)
        events: list[Event] = [entry]
        if self.config.settlement_mode is SettlementMode.PER_EVENT_ACCRUAL:
            transfer = state.transfer_for_instance()
            if transfer is not None:
                state = replace(state, transfers=state.transfers + (transfer,))
                events.append(transfer)
        return state, events

    def settlement_transfers(self) -> tuple[TransferEvent, ...]:
        """The transfer ledger a settlement of this state would use."""
        if self.config.settlement_mode is SettlementMode.PER_EVENT_ACCRUAL:
            return self.transfers
        final = self.transfer_for_instance()
        return (final,) if final is not None else ()

    def close(self) -> tuple["AuctionState", Settlement]:
        """Close the auction and settle: winner obligation plus transfer nets."""
        if not self.is_open:
            raise AuctionClosed("auction is already closed")
        winner = self.entries[0].bidder if self.entries else None
        winning_amount = self.entries[0].amount if self.entries else 0
        net: dict[str, int] = {entry.bidder: 0 for entry in self.entries}
        if winner is not None:
            net[winner] -= winning_amount
        for transfer in self.settlement_transfers():
            net[transfer.payer] = net.get(transfer.payer, 0) - transfer.amount
            net[transfer.payee] = net.get(transfer.payee, 0) + transfer.amount
        closed = replace(self, status=AuctionStatus.CLOSED)
        return closed, Settlement(winner=winner, winning_amount=winning_amount, net_by_participant=net)


Event = Union[BidEntry, TransferEvent]


# --------------------------------------------------------------------------
# Operations


def new_auction(config: RuleConfig) -> AuctionState:
    """Validate the config and return an empty open auction."""
    config.validate()
    return AuctionState(config=config)


def position_of(latest_instance: int, bid_instance: int) -> int:
    """Position id of the bid placed at ``bid_instance``, given the newest instance."""
    if bid_instance < 0 or bid_instance > latest_instance:
        raise OutOfRange(
            f"bid_instance must lie in [0, {latest_instance}], got {bid_instance}"
        )
    return latest_instance - bid_instance


def replay(events: Iterable[BidEntry], config: RuleConfig) -> AuctionState:
    """Fold a bid log into a state; the independent oracle for any live state.

    Raises the underlying error of the offending bid with its 0-based log
    index attached as ``at_index``.
    """
    state = new_auction(config)
    for index, event in enumerate(events):
        if event.instance != index:
            error = OutOfRange(
                f"bid log must have contiguous instances from 0; "
                f"expected {index}, got {event.instance}"
            )
            error.at_index = index
            raise error
        try:
            state, _ = state.place_bid(event.bidder, event.amount)
        except AuctionError as error:
            error.at_index = index
            raise
    return state


def log_of(state: AuctionState) -> tuple[BidEntry, ...]:
    """The bid event log that rebuilds ``state`` (oldest first)."""
    return tuple(reversed(state.entries))
