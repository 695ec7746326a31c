/**
 * Client-side view state: only what the server has acknowledged.
 *
 * applyFrame is a pure reducer. Frames whose seq is not strictly above the
 * watermark are dropped, so the rendered table can never go backwards, and
 * nothing is ever displayed optimistically ahead of the server.
 */

import {
  ClosedPayload,
  Envelope,
  ErrorPayload,
  StatePayload,
  TransferPayload,
  WelcomePayload,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ClientView {
  status: ConnectionStatus;
  participantId: string | null;
  token: string | null;
  isHost: boolean;
  seqWatermark: number;
  state: StatePayload | null;
  settlement: ClosedPayload | null;
  lastError: ErrorPayload | null;
  transfers: TransferPayload[];
}

const TRANSFER_FEED_LIMIT = 50;

export function initialView(): ClientView {
  return {
    status: "connecting",
    participantId: null,
    token: null,
    isHost: false,
    seqWatermark: 0,
    state: null,
    settlement: null,
    lastError: null,
    transfers: [],
  };
}

export function withStatus(view: ClientView, status: ConnectionStatus): ClientView {
  return { ...view, status, seqWatermark: status === "connecting" ? 0 : view.seqWatermark };
}

/** Clear any inline error; called when the user takes a new action. */
export function clearError(view: ClientView): ClientView {
  return view.lastError === null ? view : { ...view, lastError: null };
}

export function applyFrame(view: ClientView, frame: Envelope): ClientView {
  if (frame.seq <= view.seqWatermark) {
    return view; // stale or replayed frame: the watermark only moves forward
  }
  const next: ClientView = { ...view, seqWatermark: frame.seq };
  switch (frame.type) {
    case "welcome": {
      const payload = frame.payload as WelcomePayload;
      next.participantId = payload.participant_id;
      next.token = payload.token;
      next.isHost = payload.is_host;
      return next;
    }
    case "state":
      next.state = frame.payload as StatePayload;
      return next;
    case "transfer":
      next.transfers = [...view.transfers, frame.payload as TransferPayload].slice(
        -TRANSFER_FEED_LIMIT,
      );
      return next;
    case "closed":
      next.settlement = frame.payload as ClosedPayload;
      return next;
    case "error":
      next.lastError = frame.payload as ErrorPayload;
      return next;
    default:
      return next; // unknown server frame: advance watermark, change nothing
  }
}
