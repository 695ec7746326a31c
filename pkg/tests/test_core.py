"""Engine unit tests, including the five-bid demonstration trace."""

from __future__ import annotations

from fractions import Fraction

import pytest

from catalyst_auction.core import (
    AuctionClosed,
    BidEntry,
    BidTooLow,
    ConfigInvalid,
    OutOfRange,
    RuleConfig,
    SelfOutbidForbidden,
    SettlementMode,
    TransferEvent,
    Variant,
    log_of,
    new_auction,
    position_of,
    replay,
)
from catalyst_auction.render import DEMO_BIDS, DEMO_CONFIG

from oracles import demo_oracle


def make_config(**overrides) -> RuleConfig:
    base = dict(
        variant=Variant.RECIPIENT_IS_HIGHEST,
        alpha=Fraction(1, 10),
        catalyst_index=4,
        recipient_index=0,
        opening_bid=100,
        increment_schedule=((0, 50),),
    )
    base.update(overrides)
    return RuleConfig(**base)


def run_demo():
    state = new_auction(DEMO_CONFIG)
    for bidder, amount in DEMO_BIDS:
        state, _ = state.place_bid(bidder, amount)
    return state


class TestNewAuction:
    def test_paper_default_variants_open_empty(self):
        for config in (
            make_config(),
            make_config(variant=Variant.RECIPIENT_BETWEEN, recipient_index=2),
        ):
            state = new_auction(config)
            assert state.is_open
            assert state.entries == ()
            assert state.latest_instance == -1
            assert state.transfers == ()

    def test_catalyst_not_above_recipient_rejected(self):
        config = make_config(variant=Variant.RECIPIENT_BETWEEN, catalyst_index=2, recipient_index=2)
        with pytest.raises(ConfigInvalid):
            new_auction(config)

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(alpha=0),
            dict(alpha=Fraction(11, 10)),
            dict(alpha=-1),
            dict(opening_bid=0),
            dict(increment_schedule=()),
            dict(increment_schedule=((1, 50),)),
            dict(increment_schedule=((0, 0),)),
            dict(increment_schedule=((0, 50), (10, 100), (5, 25))),
            dict(variant=Variant.RECIPIENT_BETWEEN, catalyst_index=0, recipient_index=0),
            dict(catalyst_index=-1),
        ],
    )
    def test_invalid_configs(self, overrides):
        with pytest.raises(ConfigInvalid):
            new_auction(make_config(**overrides))

    def test_recipient_forced_to_zero_for_highest_variant(self):
        config = make_config(recipient_index=3)
        assert config.recipient_index == 0

    def test_alpha_upper_bound_inclusive(self):
        assert new_auction(make_config(alpha=1)).config.alpha == 1

    def test_float_alpha_is_exact(self):
        assert make_config(alpha=0.1).alpha == Fraction(1, 10)


class TestPositionOf:
    def test_demo_instance4_positions(self):
        assert position_of(4, 3) == 1
        assert position_of(4, 0) == 4

    @pytest.mark.parametrize("k", [0, 1, 5, 117])
    def test_newest_is_position_zero(self, k):
        assert position_of(k, k) == 0

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            position_of(4, 5)
        with pytest.raises(OutOfRange):
            position_of(4, -1)


class TestMinNextBid:
    def test_empty_auction_uses_opening_bid(self):
        assert new_auction(make_config(opening_bid=100)).min_next_bid() == 100

    def test_constant_increment(self):
        state = new_auction(make_config())
        state, _ = state.place_bid("a", 100)
        assert state.min_next_bid() == 150

    def test_schedule_step_uses_next_instance(self):
        # Top bid 500 at instance 9; the bid being priced is instance 10,
        # where the second step is already in force.
        config = make_config(opening_bid=50, increment_schedule=((0, 50), (10, 100)))
        state = new_auction(config)
        for amount in range(50, 501, 50):
            state, _ = state.place_bid(f"bidder-{amount % 3}", amount)
        assert state.latest_instance == 9
        assert state.entries[0].amount == 500
        assert state.min_next_bid() == 600

    def test_closed_auction_raises(self):
        state, _ = new_auction(make_config()).close()
        with pytest.raises(AuctionClosed):
            state.min_next_bid()


class TestPlaceBid:
    def test_demo_trace_reproduced_exactly(self):
        oracle = demo_oracle()
        state = run_demo()
        assert [(e.bidder, e.amount) for e in state.entries] == oracle.positions()
        assert [e.instance for e in state.entries] == oracle.instances
        assert [
            (t.at_instance, t.payer, t.payee, t.amount) for t in state.transfers
        ] == oracle.transfers

    def test_demo_role_columns(self):
        state = new_auction(DEMO_CONFIG)
        catalysts, recipients = [], []
        for bidder, amount in DEMO_BIDS:
            state, _ = state.place_bid(bidder, amount)
            roles = state.active_roles()
            catalysts.append(roles.catalyst.bidder if roles.catalyst else None)
            recipients.append(roles.recipient.bidder if roles.recipient else None)
        assert catalysts == [None, None, "Person 1", "Person 1", "Person 2"]
        assert recipients == ["Person 1", "Person 2", "Person 3", "Person 1", "Person 3"]

    def test_bid_too_low_reports_minimum(self):
        state = new_auction(make_config())
        state, _ = state.place_bid("a", 100)
        with pytest.raises(BidTooLow) as excinfo:
            state.place_bid("b", 120)
        assert excinfo.value.required_minimum == 150

    def test_self_outbid_forbidden(self):
        state = new_auction(make_config(allow_self_outbid=False))
        state, _ = state.place_bid("a", 100)
        with pytest.raises(SelfOutbidForbidden):
            state.place_bid("a", 150)
        state, _ = state.place_bid("b", 150)
        assert state.entries[0].bidder == "b"

    def test_self_outbid_allowed_by_default(self):
        state = new_auction(make_config())
        state, _ = state.place_bid("a", 100)
        state, _ = state.place_bid("a", 150)
        assert [e.bidder for e in state.entries] == ["a", "a"]

    def test_closed_auction_rejects_bids(self):
        state, _ = new_auction(make_config()).close()
        with pytest.raises(AuctionClosed):
            state.place_bid("a", 100)

    def test_emits_transfer_event_with_catalyst_amount(self):
        # Catalyst seat 3 holds 150 at the fifth bid: transfer is 0.1 * 150.
        config = make_config(catalyst_index=3)
        state = new_auction(config)
        events_by_bid = []
        for bidder, amount in DEMO_BIDS:
            state, events = state.place_bid(bidder, amount)
            events_by_bid.append(events)
        assert events_by_bid[-1][0] == BidEntry("Person 3", 400, 4)
        assert events_by_bid[-1][1] == TransferEvent(4, "Person 2", "Person 3", 15)
        assert [len(evs) for evs in events_by_bid] == [1, 1, 2, 2, 2]

    def test_no_transfer_events_in_final_state_mode(self):
        config = make_config(
            catalyst_index=3, settlement_mode=SettlementMode.FINAL_STATE_ONLY
        )
        state = new_auction(config)
        for bidder, amount in DEMO_BIDS:
            state, events = state.place_bid(bidder, amount)
            assert len(events) == 1
        assert state.transfers == ()

    def test_traditional_never_emits_transfers(self):
        state = new_auction(make_config(variant=Variant.TRADITIONAL))
        for bidder, amount in DEMO_BIDS:
            state, events = state.place_bid(bidder, amount)
            assert len(events) == 1
        assert state.transfers == ()
        assert state.active_roles().catalyst is None
        assert state.active_roles().recipient is None


class TestActiveRoles:
    def trace_states(self, config):
        state = new_auction(config)
        states = []
        for bidder, amount in DEMO_BIDS:
            state, _ = state.place_bid(bidder, amount)
            states.append(state)
        return states

    def test_demo_instance1_no_catalyst(self):
        config = make_config(catalyst_index=3)
        roles = self.trace_states(config)[1].active_roles()
        assert roles.catalyst is None
        assert roles.recipient == ("Person 2", 0, 150)

    def test_demo_instance2_catalyst_clamps_to_deepest(self):
        config = make_config(catalyst_index=3)
        roles = self.trace_states(config)[2].active_roles()
        assert roles.catalyst == ("Person 1", 2, 100)
        assert roles.recipient == ("Person 3", 0, 200)

    def test_demo_instance4_catalyst_at_seat(self):
        config = make_config(catalyst_index=3)
        roles = self.trace_states(config)[4].active_roles()
        assert roles.catalyst == ("Person 2", 3, 150)
        assert roles.recipient == ("Person 3", 0, 400)

    def test_between_variant_recipient_position(self):
        config = make_config(
            variant=Variant.RECIPIENT_BETWEEN, catalyst_index=4, recipient_index=2
        )
        states = self.trace_states(config)
        roles = states[4].active_roles()
        assert roles.recipient == ("Person 3", 2, 200)
        assert roles.catalyst == ("Person 1", 4, 100)
        # Before position 2 exists there is no recipient.
        assert states[1].active_roles().recipient is None

    def test_catalyst_never_collides_with_recipient(self):
        # Adjacent seats: at the boundary instance the clamped catalyst
        # position would equal the recipient position, so it stays empty.
        config = make_config(
            variant=Variant.RECIPIENT_BETWEEN, catalyst_index=2, recipient_index=1
        )
        state = new_auction(config)
        state, _ = state.place_bid("a", 100)
        state, _ = state.place_bid("b", 150)
        roles = state.active_roles()
        assert roles.recipient == ("a", 1, 100)
        assert roles.catalyst is None
        state, _ = state.place_bid("c", 200)
        roles = state.active_roles()
        assert roles.catalyst == ("a", 2, 100)
        assert roles.recipient == ("b", 1, 150)


class TestTransferForInstance:
    def test_demo_instance4_transfer(self):
        config = make_config(catalyst_index=3)
        state = new_auction(config)
        for bidder, amount in DEMO_BIDS:
            state, _ = state.place_bid(bidder, amount)
        assert state.transfer_for_instance() == TransferEvent(4, "Person 2", "Person 3", 15)

    def test_absent_before_catalyst_active(self):
        state = new_auction(make_config(catalyst_index=3))
        state, _ = state.place_bid("Person 1", 100)
        assert state.transfer_for_instance() is None

    def test_alpha_one_is_identity_scaling(self):
        config = make_config(alpha=1, catalyst_index=1)
        state = new_auction(config)
        state, _ = state.place_bid("a", 100)
        state, _ = state.place_bid("b", 150)
        transfer = state.transfer_for_instance()
        assert transfer.amount == 100

    def test_rounding_half_to_even(self):
        # alpha = 1/2 on an odd amount lands on .5 and rounds to even.
        config = make_config(alpha=Fraction(1, 2), catalyst_index=1, opening_bid=5,
                             increment_schedule=((0, 2),))
        state = new_auction(config)
        state, _ = state.place_bid("a", 5)
        state, _ = state.place_bid("b", 7)
        assert state.transfer_for_instance().amount == 2  # round(2.5) -> 2


class TestClose:
    def test_close_empty_auction(self):
        state, settlement = new_auction(make_config()).close()
        assert not state.is_open
        assert settlement.winner is None
        assert settlement.winning_amount == 0
        assert settlement.net_by_participant == {}

    def test_demo_close_per_event_accrual(self):
        oracle = demo_oracle()
        state = run_demo()
        state, settlement = state.close()
        assert settlement.winner == "Person 3"
        assert settlement.winning_amount == 400
        assert settlement.net_by_participant == oracle.settlement_nets()
        assert settlement.net_by_participant == {
            "Person 1": -10,
            "Person 2": -15,
            "Person 3": -375,
        }

    def test_demo_close_final_state_only(self):
        config = make_config(
            catalyst_index=3, settlement_mode=SettlementMode.FINAL_STATE_ONLY
        )
        state = new_auction(config)
        for bidder, amount in DEMO_BIDS:
            state, _ = state.place_bid(bidder, amount)
        assert state.settlement_transfers() == (TransferEvent(4, "Person 2", "Person 3", 15),)
        _, settlement = state.close()
        assert settlement.net_by_participant == demo_oracle(False).settlement_nets()

    def test_double_close_raises(self):
        state, _ = new_auction(make_config()).close()
        with pytest.raises(AuctionClosed):
            state.close()

    def test_self_transfer_nets_to_zero(self):
        # The demonstration's instance 3 has the same person in both roles.
        state = run_demo()
        self_transfers = [t for t in state.transfers if t.payer == t.payee]
        assert self_transfers == [TransferEvent(3, "Person 1", "Person 1", 10)]
        _, settlement = state.close()
        nets = settlement.net_by_participant
        # Removing the self-transfer changes nothing.
        assert nets["Person 1"] == -10


class TestReplay:
    def test_empty_log_is_new_auction(self):
        config = make_config()
        assert replay([], config) == new_auction(config)

    def test_demo_log_round_trips(self):
        state = run_demo()
        assert replay(log_of(state), DEMO_CONFIG) == state

    def test_replay_matches_incremental_build(self):
        config = make_config(catalyst_index=3)
        state = new_auction(config)
        events = []
        amount = 100
        for i in range(50):
            state, emitted = state.place_bid(f"bidder-{i % 7}", amount)
            events.append(emitted[0])
            amount += 50 + (i % 3)
        assert replay(events, config) == state

    def test_error_carries_offending_index(self):
        config = make_config()
        events = [
            BidEntry("a", 100, 0),
            BidEntry("b", 150, 1),
            BidEntry("c", 151, 2),  # below minimum 200
        ]
        with pytest.raises(BidTooLow) as excinfo:
            replay(events, config)
        assert excinfo.value.at_index == 2

    def test_non_contiguous_instances_rejected(self):
        config = make_config()
        events = [BidEntry("a", 100, 0), BidEntry("b", 150, 2)]
        with pytest.raises(OutOfRange) as excinfo:
            replay(events, config)
        assert excinfo.value.at_index == 1
