"""Append-only event-log file format.

One canonical JSON document per line.  The first line is a config header;
the rest are bid, transfer, and phase records:

    {"type":"config", ...rule fields...}
    {"amount":100,"bidder":"Person 1","instance":0,"type":"bid"}
    {"amount":15,"at_instance":4,"payee":"Person 3","payer":"Person 2","type":"transfer"}
    {"type":"phase","value":"running"}

Serialization is canonical (sorted keys, no whitespace), so a parse followed
by a serialize reproduces any line written by this module byte for byte.
Alpha travels as an exact "numerator/denominator" string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .core import (
    BidEntry,
    LogCorrupt,
    RuleConfig,
    SettlementMode,
    TransferEvent,
    Variant,
    _coerce_alpha,
)


@dataclass(frozen=True)
class PhaseRecord:
    """Room lifecycle marker: lobby, running, or closed."""

    value: str


Record = Union[RuleConfig, BidEntry, TransferEvent, PhaseRecord]


def _canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_to_doc(config: RuleConfig) -> dict:
    return {
        "type": "config",
        "variant": config.variant.value,
        "alpha": f"{config.alpha.numerator}/{config.alpha.denominator}",
        "catalyst_index": config.catalyst_index,
        "recipient_index": config.recipient_index,
        "opening_bid": config.opening_bid,
        "increment_schedule": [[f, m] for f, m in config.increment_schedule],
        "settlement_mode": config.settlement_mode.value,
        "allow_self_outbid": config.allow_self_outbid,
    }


def config_from_doc(doc: dict) -> RuleConfig:
    """Build a RuleConfig from a parsed document; missing fields take defaults.

    Alpha may be a "num/den" string (the canonical form) or a plain number;
    decimal floats are read exactly, so 0.1 means 1/10.
    """
    defaults = RuleConfig()
    return RuleConfig(
        variant=Variant(doc["variant"]),
        alpha=_coerce_alpha(doc.get("alpha", defaults.alpha)),
        catalyst_index=doc.get("catalyst_index", defaults.catalyst_index),
        recipient_index=doc.get("recipient_index", defaults.recipient_index),
        opening_bid=doc.get("opening_bid", defaults.opening_bid),
        increment_schedule=tuple(
            (f, m) for f, m in doc.get("increment_schedule", defaults.increment_schedule)
        ),
        settlement_mode=SettlementMode(doc.get("settlement_mode", defaults.settlement_mode.value)),
        allow_self_outbid=doc.get("allow_self_outbid", defaults.allow_self_outbid),
    )


def record_to_doc(record: Record) -> dict:
    if isinstance(record, RuleConfig):
        return config_to_doc(record)
    if isinstance(record, BidEntry):
        return {
            "type": "bid",
            "instance": record.instance,
            "bidder": record.bidder,
            "amount": record.amount,
        }
    if isinstance(record, TransferEvent):
        return {
            "type": "transfer",
            "at_instance": record.at_instance,
            "payer": record.payer,
            "payee": record.payee,
            "amount": record.amount,
        }
    if isinstance(record, PhaseRecord):
        return {"type": "phase", "value": record.value}
    raise TypeError(f"not a log record: {record!r}")


def serialize_record(record: Record) -> str:
    """Canonical single-line serialization (no trailing newline)."""
    return _canonical(record_to_doc(record))


def parse_record(line: str, line_no: int = 1) -> Record:
    """Parse one log line; raises :class:`LogCorrupt` carrying ``line_no``."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogCorrupt(line_no, f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "type" not in doc:
        raise LogCorrupt(line_no, "record must be a JSON object with a 'type' field")
    kind = doc["type"]
    try:
        if kind == "config":
            return config_from_doc(doc)
        if kind == "bid":
            return BidEntry(bidder=doc["bidder"], amount=doc["amount"], instance=doc["instance"])
        if kind == "transfer":
            return TransferEvent(
                at_instance=doc["at_instance"],
                payer=doc["payer"],
                payee=doc["payee"],
                amount=doc["amount"],
            )
        if kind == "phase":
            value = doc["value"]
            if value not in ("lobby", "running", "closed"):
                raise ValueError(f"unknown phase {value!r}")
            return PhaseRecord(value=value)
    except LogCorrupt:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise LogCorrupt(line_no, f"bad {kind} record: {exc}") from exc
    raise LogCorrupt(line_no, f"unknown record type {kind!r}")


def read_log(path: Union[str, Path]) -> tuple[RuleConfig, list[Record]]:
    """Read a log file: returns the header config and the remaining records."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise LogCorrupt(1, "log file is empty, config header missing")
    header = parse_record(lines[0], 1)
    if not isinstance(header, RuleConfig):
        raise LogCorrupt(1, "first log line must be the config header")
    records = [parse_record(line, i + 2) for i, line in enumerate(lines[1:])]
    return header, records


def write_log(path: Union[str, Path], config: RuleConfig, records: list[Record] = ()) -> None:
    """Write a fresh log file: config header plus records, one per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write(serialize_record(config) + "\n")
        for record in records:
            handle.write(serialize_record(record) + "\n")


class LogWriter:
    """Append-only writer that flushes and fsyncs every record.

    The fsync is what makes the log the source of truth: a record is
    broadcast or acted upon only after it is durable.
    """

    def __init__(self, path: Union[str, Path], config: RuleConfig, fresh: bool = False):
        import os

        self._os = os
        self.path = Path(path)
        exists = self.path.exists() and self.path.stat().st_size > 0
        if fresh or not exists:
            self._handle = self.path.open("w", encoding="utf-8")
            self.append(config)
        else:
            self._handle = self.path.open("a", encoding="utf-8")

    def append(self, record: Record) -> None:
        self._handle.write(serialize_record(record) + "\n")
        self._handle.flush()
        self._os.fsync(self._handle.fileno())

    def close(self) -> None:
        self._handle.close()
