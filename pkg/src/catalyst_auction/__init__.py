"""Ascending auctions with catalyst/recipient side payments.

Engine, agent-based simulation lab, live auction-room service, and CLI.
"""

from .core import (
    AuctionClosed,
    AuctionError,
    AuctionState,
    AuctionStatus,
    BidEntry,
    BidTooLow,
    ConfigInvalid,
    LogCorrupt,
    OutOfRange,
    RoleAssignment,
    RoleHolder,
    RuleConfig,
    SelfOutbidForbidden,
    Settlement,
    SettlementMode,
    TransferEvent,
    Variant,
    log_of,
    new_auction,
    position_of,
    replay,
)

__all__ = [
    "AuctionClosed",
    "AuctionError",
    "AuctionState",
    "AuctionStatus",
    "BidEntry",
    "BidTooLow",
    "ConfigInvalid",
    "LogCorrupt",
    "OutOfRange",
    "RoleAssignment",
    "RoleHolder",
    "RuleConfig",
    "SelfOutbidForbidden",
    "Settlement",
    "SettlementMode",
    "TransferEvent",
    "Variant",
    "log_of",
    "new_auction",
    "position_of",
    "replay",
]

__version__ = "0.1.0"
