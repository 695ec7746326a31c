"""Live auction rooms over a JSON-frame message protocol.

Clients join a room with ``hello``, receive ``welcome`` plus a full ``state``
snapshot, then place ``bid`` messages; every accepted bid is appended to the
room's event log (flushed and fsynced) before a new ``state`` snapshot, and
any ``transfer``, is broadcast to all members.  The host may ``start`` the
room out of the lobby and ``close`` it, which broadcasts the settlement.

All mutations of one room are serialized through a single asyncio lock, so
concurrent bids resolve in some total order: the loser simply gets a
``BID_TOO_LOW`` error with the refreshed minimum.  The log is the source of
truth; an in-memory room always equals the replay of its log, and a room is
recovered from the log alone after a crash.

Outbound frames per connection go through a bounded queue; a consumer that
falls too far behind is disconnected rather than allowed to stall the room.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import re
import secrets
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .core import (
    AuctionClosed,
    AuctionError,
    AuctionState,
    BidEntry,
    BidTooLow,
    ConfigInvalid,
    LogCorrupt,
    RuleConfig,
    SelfOutbidForbidden,
    Settlement,
    TransferEvent,
    new_auction,
)
from .eventlog import LogWriter, PhaseRecord, config_from_doc, config_to_doc, read_log

logger = logging.getLogger(__name__)

ENV_LISTEN = "AUCTION_LISTEN"
ENV_LOG_DIR = "AUCTION_LOG_DIR"
ENV_MAX_CLIENTS = "AUCTION_MAX_CLIENTS"

DEFAULT_LISTEN = "127.0.0.1:8765"
DEFAULT_LOG_DIR = "./auction-logs"
DEFAULT_MAX_CLIENTS = 64
DEFAULT_MAX_QUEUE = 256


class Phase(str, Enum):
    LOBBY = "lobby"
    RUNNING = "running"
    CLOSED = "closed"


# Error codes on the wire.
BID_TOO_LOW = "BID_TOO_LOW"
NOT_RUNNING = "NOT_RUNNING"
SELF_OUTBID_FORBIDDEN = "SELF_OUTBID_FORBIDDEN"
UNAUTHORIZED = "UNAUTHORIZED"
MALFORMED = "MALFORMED"


class WireError(Exception):
    """Protocol-level rejection that becomes an error frame to the sender."""

    def __init__(self, code: str, detail: str, **extra):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail
        self.extra = extra

    def payload(self) -> dict:
        return {"code": self.code, "detail": self.detail, **self.extra}


@dataclass
class Member:
    participant_id: str
    name: str
    token: str
    is_host: bool = False


class Session:
    """One client connection: a member slot plus a bounded outbound queue."""

    def __init__(self, max_queue: int = DEFAULT_MAX_QUEUE):
        self.id = uuid.uuid4().hex[:8]
        self.member: Optional[Member] = None
        self.last_client_seq = 0
        self._out_seq = 0
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=max_queue)
        self.overflowed = False

    def enqueue(self, msg_type: str, payload: dict) -> bool:
        """Queue one frame; returns False (and marks overflow) when full."""
        if self.overflowed:
            return False
        self._out_seq += 1
        frame = json.dumps(
            {"type": msg_type, "seq": self._out_seq, "payload": payload},
            sort_keys=True,
            separators=(",", ":"),
        )
        try:
            self.queue.put_nowait(frame)
        except asyncio.QueueFull:
            self.overflowed = True
            return False
        return True


Outbound = tuple[str, str, dict]  # scope ("sender" | "all"), type, payload

_PARTICIPANT_ID = re.compile(r"^p(\d+)$")


class Room:
    """One auction room: engine state, members, sessions, append-only log."""

    def __init__(
        self,
        room_id: str,
        config: RuleConfig,
        log_path: Union[str, Path],
        host_token: str,
        state: Optional[AuctionState] = None,
        phase: Phase = Phase.LOBBY,
        settlement: Optional[Settlement] = None,
        next_participant: int = 1,
        max_clients: int = DEFAULT_MAX_CLIENTS,
    ):
        self.room_id = room_id
        self.config = config
        self.state = state if state is not None else new_auction(config)
        self.phase = phase
        self.settlement = settlement
        self.members: dict[str, Member] = {}
        self._by_token: dict[str, Member] = {}
        self.host_token = host_token
        self.sessions: dict[str, Session] = {}
        self.lock = asyncio.Lock()
        self.log = LogWriter(log_path, config)
        self._next_participant = next_participant
        self.max_clients = max_clients

    # -- membership ------------------------------------------------------

    def attach(self, session: Session) -> None:
        self.sessions[session.id] = session

    def detach(self, session: Session) -> None:
        self.sessions.pop(session.id, None)

    def _join(self, name: str, token: Optional[str]) -> Member:
        if token is not None:
            if token == self.host_token:
                member = self._by_token.get(token)
                if member is None:
                    member = self._new_member(name, token=token, is_host=True)
                return member
            member = self._by_token.get(token)
            if member is None:
                raise WireError(UNAUTHORIZED, "unknown session token")
            return member
        if len(self.members) >= self.max_clients:
            raise WireError(UNAUTHORIZED, "room is full")
        return self._new_member(name, token=secrets.token_hex(8))

    def _new_member(self, name: str, token: str, is_host: bool = False) -> Member:
        participant_id = f"p{self._next_participant}"
        self._next_participant += 1
        member = Member(participant_id, name, token, is_host)
        self.members[participant_id] = member
        self._by_token[token] = member
        return member

    # -- payloads ---------------------------------------------------------

    def state_payload(self) -> dict:
        roles = self.state.active_roles()

        def role_doc(holder):
            if holder is None:
                return None
            return {
                "bidder": holder.bidder,
                "name": self._display_name(holder.bidder),
                "position": holder.position,
                "amount": holder.amount,
            }

        if self.settlement is not None:
            liabilities = dict(self.settlement.net_by_participant)
        elif self.state.is_open:
            liabilities = self.state.close()[1].net_by_participant
        else:
            liabilities = {}
        return {
            "room_id": self.room_id,
            "phase": self.phase.value,
            "variant": self.config.variant.value,
            "alpha": f"{self.config.alpha.numerator}/{self.config.alpha.denominator}",
            "catalyst_index": self.config.catalyst_index,
            "recipient_index": self.config.recipient_index,
            "latest_instance": self.state.latest_instance,
            "min_next_bid": self.state.min_next_bid() if self.state.is_open else None,
            "entries": [
                {
                    "position": position,
                    "bidder": entry.bidder,
                    "name": self._display_name(entry.bidder),
                    "amount": entry.amount,
                    "instance": entry.instance,
                }
                for position, entry in enumerate(self.state.entries)
            ],
            "roles": {"catalyst": role_doc(roles.catalyst), "recipient": role_doc(roles.recipient)},
            "liabilities": dict(sorted(liabilities.items())),
            "members": [
                {"participant_id": m.participant_id, "name": m.name}
                for m in self.members.values()
            ],
        }

    def _display_name(self, participant_id: str) -> str:
        member = self.members.get(participant_id)
        return member.name if member else participant_id

    @staticmethod
    def _transfer_payload(transfer: TransferEvent) -> dict:
        return {
            "at_instance": transfer.at_instance,
            "payer": transfer.payer,
            "payee": transfer.payee,
            "amount": transfer.amount,
        }

    def _settlement_payload(self) -> dict:
        settlement = self.settlement
        return {
            "winner": settlement.winner,
            "winning_amount": settlement.winning_amount,
            "net_by_participant": dict(sorted(settlement.net_by_participant.items())),
        }

    # -- message handling --------------------------------------------------

    async def handle_message(self, session: Session, msg_type: str, payload: dict) -> list[Outbound]:
        """Apply one client message under the room's writer lock.

        Returns the outbound messages; they are also enqueued to the
        affected sessions before the lock is released, so every connection
        observes state snapshots in mutation order.
        """
        async with self.lock:
            try:
                outs = self._dispatch(session, msg_type, payload)
            except WireError as error:
                outs = [("sender", "error", error.payload())]
            self._fan_out(session, outs)
            return outs

    def _dispatch(self, session: Session, msg_type: str, payload: dict) -> list[Outbound]:
        if msg_type == "hello":
            return self._on_hello(session, payload)
        if session.member is None:
            raise WireError(UNAUTHORIZED, "say hello first")
        if msg_type == "bid":
            return self._on_bid(session.member, payload)
        if msg_type == "start":
            return self._on_start(session.member)
        if msg_type == "close":
            return self._on_close(session.member)
        raise WireError(MALFORMED, f"unknown message type {msg_type!r}")

    def _on_hello(self, session: Session, payload: dict) -> list[Outbound]:
        if session.member is not None:
            raise WireError(MALFORMED, "already joined")
        name = payload.get("name")
        if not isinstance(name, str) or not name.strip():
            raise WireError(MALFORMED, "hello needs a non-empty name")
        token = payload.get("token")
        if token is not None and not isinstance(token, str):
            raise WireError(MALFORMED, "token must be a string")
        member = self._join(name.strip(), token)
        session.member = member
        welcome = {
            "participant_id": member.participant_id,
            "token": member.token,
            "room_id": self.room_id,
            "is_host": member.is_host,
        }
        return [("sender", "welcome", welcome), ("sender", "state", self.state_payload())]

    def _on_bid(self, member: Member, payload: dict) -> list[Outbound]:
        if self.phase is not Phase.RUNNING:
            raise WireError(NOT_RUNNING, f"room is {self.phase.value}, not running")
        amount = payload.get("amount")
        if not isinstance(amount, int) or isinstance(amount, bool):
            raise WireError(MALFORMED, "bid needs an integer amount")
        try:
            new_state, events = self.state.place_bid(member.participant_id, amount)
        except BidTooLow as error:
            raise WireError(
                BID_TOO_LOW,
                f"minimum next bid is {error.required_minimum}",
                required_minimum=error.required_minimum,
            ) from error
        except SelfOutbidForbidden as error:
            raise WireError(SELF_OUTBID_FORBIDDEN, str(error)) from error
        except AuctionClosed as error:
            raise WireError(NOT_RUNNING, str(error)) from error
        # Durability before visibility: log first, then broadcast.
        for event in events:
            self.log.append(event)
        self.state = new_state
        outs: list[Outbound] = [("all", "state", self.state_payload())]
        for event in events:
            if isinstance(event, TransferEvent):
                outs.append(("all", "transfer", self._transfer_payload(event)))
        return outs

    def _on_start(self, member: Member) -> list[Outbound]:
        if not member.is_host:
            raise WireError(UNAUTHORIZED, "only the host may start the room")
        if self.phase is not Phase.LOBBY:
            raise WireError(MALFORMED, f"cannot start a {self.phase.value} room")
        self.log.append(PhaseRecord(Phase.RUNNING.value))
        self.phase = Phase.RUNNING
        return [("all", "state", self.state_payload())]

    def _on_close(self, member: Member) -> list[Outbound]:
        if not member.is_host:
            raise WireError(UNAUTHORIZED, "only the host may close the room")
        if self.phase is Phase.CLOSED:
            raise WireError(NOT_RUNNING, "room is already closed")
        self.log.append(PhaseRecord(Phase.CLOSED.value))
        self.state, self.settlement = self.state.close()
        self.phase = Phase.CLOSED
        return [("all", "closed", self._settlement_payload())]

    def _fan_out(self, sender: Session, outs: list[Outbound]) -> None:
        for scope, msg_type, payload in outs:
            if scope == "sender":
                targets = [sender]
            else:
                targets = [s for s in self.sessions.values() if s.member is not None]
            for session in targets:
                session.enqueue(msg_type, payload)


class RoomManager:
    """Owns all rooms and their log directory."""

    def __init__(
        self,
        log_dir: Union[str, Path],
        max_clients: int = DEFAULT_MAX_CLIENTS,
        max_queue: int = DEFAULT_MAX_QUEUE,
    ):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.max_clients = max_clients
        self.max_queue = max_queue
        self.rooms: dict[str, Room] = {}

    def log_path(self, room_id: str) -> Path:
        return self.log_dir / f"{room_id}.log"

    def open_room(self, config: RuleConfig, host_name: str = "host") -> Room:
        """Create a lobby room with a fresh log; returns the room (the host
        token is on ``room.host_token``)."""
        config.validate()
        room_id = uuid.uuid4().hex[:12]
        room = Room(
            room_id,
            config,
            self.log_path(room_id),
            host_token=secrets.token_hex(8),
            max_clients=self.max_clients,
        )
        self.rooms[room_id] = room
        logger.info("opened room %s (host %s)", room_id, host_name)
        return room

    def get(self, room_id: str) -> Optional[Room]:
        return self.rooms.get(room_id)

    def recover(self, room_id: str) -> Room:
        """Rebuild a room from its log alone.

        Bids are folded through the engine; logged transfers are checked
        against the regenerated ones so silent divergence is impossible.
        Membership is ephemeral and starts empty; participant-id numbering
        resumes past any id seen in the log.
        """
        path = self.log_path(room_id)
        if not path.exists():
            raise LogCorrupt(1, f"no log for room {room_id}")
        config, records = read_log(path)
        state = new_auction(config)
        phase = Phase.LOBBY
        transfers_seen = 0
        max_participant = 0
        for offset, record in enumerate(records):
            line_no = offset + 2  # line 1 is the config header
            if isinstance(record, RuleConfig):
                raise LogCorrupt(line_no, "duplicate config header")
            if isinstance(record, BidEntry):
                if phase is not Phase.RUNNING:
                    raise LogCorrupt(line_no, f"bid while room is {phase.value}")
                if record.instance != state.latest_instance + 1:
                    raise LogCorrupt(line_no, f"instance {record.instance} out of order")
                try:
                    state, _ = state.place_bid(record.bidder, record.amount)
                except AuctionError as error:
                    raise LogCorrupt(line_no, f"bid does not replay: {error}") from error
                match = _PARTICIPANT_ID.match(record.bidder)
                if match:
                    max_participant = max(max_participant, int(match.group(1)))
            elif isinstance(record, TransferEvent):
                expected = state.transfers[transfers_seen] if transfers_seen < len(state.transfers) else None
                if record != expected:
                    raise LogCorrupt(line_no, f"transfer does not match replay: {record}")
                transfers_seen += 1
            elif isinstance(record, PhaseRecord):
                phase = Phase(record.value)
        if transfers_seen != len(state.transfers):
            raise LogCorrupt(len(records) + 1, "log is missing trailing transfer records")
        settlement = None
        if phase is Phase.CLOSED:
            state, settlement = state.close()
        room = Room(
            room_id,
            config,
            path,
            host_token=secrets.token_hex(8),
            state=state,
            phase=phase,
            settlement=settlement,
            next_participant=max_participant + 1,
            max_clients=self.max_clients,
        )
        self.rooms[room_id] = room
        logger.info(
            "recovered room %s at instance %d, phase %s (new host token %s)",
            room_id, state.latest_instance, phase.value, room.host_token,
        )
        return room

    def recover_all(self) -> list[str]:
        recovered = []
        for path in sorted(self.log_dir.glob("*.log")):
            room_id = path.stem
            try:
                self.recover(room_id)
                recovered.append(room_id)
            except LogCorrupt as error:
                logger.error("skipping room %s: %s", room_id, error)
        return recovered


# --------------------------------------------------------------------------
# Transport


async def process_frame(room: Room, session: Session, text: str) -> list[Outbound]:
    """Validate one raw frame and hand it to the room.

    Envelope errors never touch the room; they answer the sender directly.
    """
    def refuse(detail: str) -> list[Outbound]:
        payload = WireError(MALFORMED, detail).payload()
        session.enqueue("error", payload)
        return [("sender", "error", payload)]

    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return refuse("frame is not valid JSON")
    if not isinstance(doc, dict):
        return refuse("frame must be a JSON object")
    msg_type = doc.get("type")
    if not isinstance(msg_type, str):
        return refuse("missing message type")
    seq = doc.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool):
        return refuse("missing integer seq")
    if seq <= session.last_client_seq:
        return refuse(f"seq must increase (last was {session.last_client_seq})")
    session.last_client_seq = seq
    payload = doc.get("payload", {})
    if not isinstance(payload, dict):
        return refuse("payload must be an object")
    return await room.handle_message(session, msg_type, payload)


def create_app(
    log_dir: Optional[str] = None,
    max_clients: Optional[int] = None,
    max_queue: Optional[int] = None,
) -> FastAPI:
    """Build the ASGI app; unset parameters fall back to environment variables."""
    manager = RoomManager(
        log_dir=log_dir or os.environ.get(ENV_LOG_DIR, DEFAULT_LOG_DIR),
        max_clients=max_clients
        if max_clients is not None
        else int(os.environ.get(ENV_MAX_CLIENTS, DEFAULT_MAX_CLIENTS)),
        max_queue=max_queue if max_queue is not None else DEFAULT_MAX_QUEUE,
    )
    recovered = manager.recover_all()
    if recovered:
        logger.info("recovered %d room(s): %s", len(recovered), ", ".join(recovered))

    app = FastAPI(title="catalyst-auction rooms")
    app.state.manager = manager

    @app.post("/rooms")
    async def open_room(body: dict):
        try:
            config = config_from_doc({"variant": "traditional", **body.get("config", {})})
            room = manager.open_room(config, host_name=body.get("host_name", "host"))
        except (ConfigInvalid, KeyError, TypeError, ValueError) as error:
            return JSONResponse(status_code=400, content={"error": str(error)})
        return JSONResponse(
            status_code=201,
            content={"room_id": room.room_id, "host_token": room.host_token},
        )

    @app.get("/rooms")
    async def list_rooms():
        return {
            "rooms": [
                {
                    "room_id": room.room_id,
                    "phase": room.phase.value,
                    "members": len(room.members),
                    "bids": room.state.latest_instance + 1,
                }
                for room in manager.rooms.values()
            ]
        }

    @app.get("/rooms/{room_id}")
    async def room_state(room_id: str):
        room = manager.get(room_id)
        if room is None:
            return JSONResponse(status_code=404, content={"error": "no such room"})
        return room.state_payload()

    @app.get("/rooms/{room_id}/config")
    async def room_config(room_id: str):
        room = manager.get(room_id)
        if room is None:
            return JSONResponse(status_code=404, content={"error": "no such room"})
        return {k: v for k, v in config_to_doc(room.config).items() if k != "type"}

    @app.websocket("/ws/{room_id}")
    async def room_socket(websocket: WebSocket, room_id: str):
        room = manager.get(room_id)
        if room is None:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        session = Session(max_queue=manager.max_queue)
        room.attach(session)

        async def pump_outbound():
            # Drains the bounded queue; an overflowed session is cut off
            # instead of being allowed to stall behind the room.
            while True:
                frame = await session.queue.get()
                await websocket.send_text(frame)
                if session.overflowed:
                    logger.warning("session %s dropped: outbound queue overflow", session.id)
                    await websocket.close(code=1013)
                    return

        sender = asyncio.create_task(pump_outbound())
        try:
            while True:
                text = await websocket.receive_text()
                await process_frame(room, session, text)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            room.detach(session)
            sender.cancel()

    return app
