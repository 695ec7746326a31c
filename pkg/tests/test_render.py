"""Golden-file tests for the position-table renderer."""

from __future__ import annotations

from importlib import resources

from catalyst_auction.core import new_auction
from catalyst_auction.render import (
    DEMO_BIDS,
    DEMO_CONFIG,
    demo_table,
    render_positions,
    render_state,
    render_trace,
)


def golden_text() -> str:
    return (
        resources.files("catalyst_auction")
        .joinpath("data/demo_table.txt")
        .read_text(encoding="utf-8")
    )


def test_demo_table_matches_golden():
    assert demo_table() + "\n" == golden_text()


def test_golden_contains_expected_role_columns():
    lines = golden_text().strip().splitlines()
    assert len(lines) == 6  # header + five instances
    catalysts = [line.split(" | ")[2].strip() for line in lines[1:]]
    recipients = [line.split(" | ")[3].strip() for line in lines[1:]]
    assert catalysts == ["Null", "Null", "Person 1", "Person 1", "Person 2"]
    assert recipients == ["Person 1", "Person 2", "Person 3", "Person 1", "Person 3"]


def test_final_row_positions():
    final = golden_text().strip().splitlines()[-1]
    assert (
        "P0: {Person 3, 400}, P1: {Person 1, 250}, P2: {Person 3, 200}, "
        "P3: {Person 2, 150}, P4: {Person 1, 100}" in final
    )


def test_render_positions_empty_state():
    assert render_positions(new_auction(DEMO_CONFIG)) == ""


def test_render_state_single_row():
    state = new_auction(DEMO_CONFIG)
    state, _ = state.place_bid("Person 1", 100)
    text = render_state(state)
    assert "P0: {Person 1, 100}" in text
    assert text.splitlines()[0].startswith("Instance")


def test_render_trace_is_pure():
    assert render_trace(DEMO_CONFIG, DEMO_BIDS) == render_trace(DEMO_CONFIG, DEMO_BIDS)
