/**
 * Room client: one socket, hello on open, auto-reconnect with backoff, and
 * a view that only ever reflects server-acknowledged frames.
 */

import { parseFrame } from "./protocol.js";
import { applyFrame, clearError, ClientView, initialView, withStatus } from "./view.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface RoomClientOptions {
  name: string;
  token?: string;
  socketFactory?: SocketFactory;
  reconnectDelayMs?: number;
  maxReconnectDelayMs?: number;
  onChange?: (view: ClientView) => void;
}

const defaultFactory: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike;

export class RoomClient {
  view: ClientView = initialView();

  private socket: SocketLike | null = null;
  private outSeq = 0;
  private reconnectAttempts = 0;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private disposed = false;

  constructor(
    private readonly url: string,
    private readonly options: RoomClientOptions,
  ) {}

  connect(): void {
    if (this.disposed) return;
    this.setView(withStatus(this.view, "connecting"));
    this.outSeq = 0;
    const factory = this.options.socketFactory ?? defaultFactory;
    const socket = factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectAttempts = 0;
      this.setView(withStatus(this.view, "open"));
      // A stored token re-establishes the same participant after a drop.
      const token = this.view.token ?? this.options.token;
      this.sendFrame("hello", token ? { name: this.options.name, token } : { name: this.options.name });
    };
    socket.onmessage = (event) => {
      const frame = parseFrame(event.data);
      if (frame) this.setView(applyFrame(this.view, frame));
    };
    socket.onclose = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.setView(withStatus(this.view, "closed"));
      this.scheduleReconnect();
    };
  }

  /**
   * Send exactly one bid frame; returns false (and sends nothing) unless
   * the room is running and the connection is open. The table does not
   * change until the server answers with state or error.
   */
  submitBid(amount: number): boolean {
    if (this.view.status !== "open") return false;
    if (!this.view.state || this.view.state.phase !== "running") return false;
    this.setView(clearError(this.view));
    this.sendFrame("bid", { amount });
    return true;
  }

  startRoom(): boolean {
    if (this.view.status !== "open" || !this.view.isHost) return false;
    this.sendFrame("start", {});
    return true;
  }

  closeRoom(): boolean {
    if (this.view.status !== "open" || !this.view.isHost) return false;
    this.sendFrame("close", {});
    return true;
  }

  dispose(): void {
    this.disposed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
  }

  private sendFrame(type: string, payload: unknown): void {
    if (!this.socket) return;
    this.outSeq += 1;
    this.socket.send(JSON.stringify({ type, seq: this.outSeq, payload }));
  }

  private scheduleReconnect(): void {
    if (this.disposed) return;
    const base = this.options.reconnectDelayMs ?? 500;
    const cap = this.options.maxReconnectDelayMs ?? 15000;
    const delay = Math.min(base * 2 ** this.reconnectAttempts, cap);
    this.reconnectAttempts += 1;
    this.reconnectTimer = setTimeout(() => this.connect(), delay);
  }

  private setView(view: ClientView): void {
    this.view = view;
    this.options.onChange?.(view);
  }
}
