"""Plain-text rendering of auction states as a position table.

The layout mirrors the worked demonstration the mechanism is usually
introduced with: one row per instance, a position list column written as
``P0: {bidder, amount}, P1: {...}``, and catalyst/recipient columns naming
the current role holders (or ``Null``).
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import AuctionState, BidEntry, RoleAssignment, RuleConfig, Variant, new_auction

HEADERS = ("Instance", "Positions", "Catalyst", "Recipient")

# Five-bid demonstration trace: catalyst seat 3 paying the highest bidder.
DEMO_CONFIG = RuleConfig(
    variant=Variant.RECIPIENT_IS_HIGHEST,
    alpha="1/10",
    catalyst_index=3,
    recipient_index=0,
    opening_bid=100,
    increment_schedule=((0, 50),),
)
DEMO_BIDS = (
    ("Person 1", 100),
    ("Person 2", 150),
    ("Person 3", 200),
    ("Person 1", 250),
    ("Person 3", 400),
)


def render_positions(state: AuctionState) -> str:
    """The position list of one state: ``P0: {bidder, amount}, P1: ...``."""
    return ", ".join(
        f"P{position}: {{{entry.bidder}, {entry.amount}}}"
        for position, entry in enumerate(state.entries)
    )


def _role_name(holder) -> str:
    return holder.bidder if holder is not None else "Null"


def state_row(state: AuctionState) -> tuple[str, str, str, str]:
    """One table row (instance, positions, catalyst, recipient) for a state."""
    roles: RoleAssignment = state.active_roles()
    return (
        str(state.latest_instance),
        render_positions(state),
        _role_name(roles.catalyst),
        _role_name(roles.recipient),
    )


def format_rows(rows: Sequence[tuple[str, str, str, str]]) -> str:
    """Align rows plus the header into a pipe-separated table."""
    table = [HEADERS, *rows]
    widths = [max(len(row[col]) for row in table) for col in range(len(HEADERS))]
    lines = [
        " | ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in table
    ]
    return "\n".join(lines)


def render_state(state: AuctionState) -> str:
    """A single-state table: header plus the one current row."""
    return format_rows([state_row(state)])


def render_trace(config: RuleConfig, bids: Iterable[tuple[str, int]]) -> str:
    """Replay ``bids`` from scratch and render one row per instance."""
    state = new_auction(config)
    rows = []
    for bidder, amount in bids:
        state, _ = state.place_bid(bidder, amount)
        rows.append(state_row(state))
    return format_rows(rows)


def render_log_trace(config: RuleConfig, bids: Sequence[BidEntry]) -> str:
    """Same as :func:`render_trace` but fed from parsed bid events."""
    return render_trace(config, [(bid.bidder, bid.amount) for bid in bids])


def demo_table() -> str:
    """The built-in five-bid demonstration table."""
    return render_trace(DEMO_CONFIG, DEMO_BIDS)
