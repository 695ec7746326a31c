/**
 * Wire protocol spoken with the auction-room service: one JSON text frame
 * per message, envelope {type, seq, payload}, seq strictly increasing per
 * direction per connection.
 */

export interface Envelope {
  type: string;
  seq: number;
  payload: unknown;
}

export type Phase = "lobby" | "running" | "closed";

export interface EntryRow {
  position: number;
  bidder: string;
  name: string;
  amount: number;
  instance: number;
}

export interface RoleDoc {
  bidder: string;
  name: string;
  position: number;
  amount: number;
}

export interface MemberDoc {
  participant_id: string;
  name: string;
}

export interface StatePayload {
  room_id: string;
  phase: Phase;
  variant: string;
  alpha: string;
  catalyst_index: number;
  recipient_index: number;
  latest_instance: number;
  min_next_bid: number | null;
  entries: EntryRow[];
  roles: { catalyst: RoleDoc | null; recipient: RoleDoc | null };
  liabilities: Record<string, number>;
  members: MemberDoc[];
}

export interface WelcomePayload {
  participant_id: string;
  token: string;
  room_id: string;
  is_host: boolean;
}

export interface TransferPayload {
  at_instance: number;
  payer: string;
  payee: string;
  amount: number;
}

export interface ClosedPayload {
  winner: string | null;
  winning_amount: number;
  net_by_participant: Record<string, number>;
}

export interface ErrorPayload {
  code: string;
  detail: string;
  required_minimum?: number;
}

export function parseFrame(text: string): Envelope | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const frame = doc as { type?: unknown; seq?: unknown; payload?: unknown };
  if (typeof frame.type !== "string" || typeof frame.seq !== "number") return null;
  return { type: frame.type, seq: frame.seq, payload: frame.payload ?? {} };
}
