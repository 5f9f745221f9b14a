/**
 * Reconnecting WebSocket client for the envelope stream.
 *
 * Re-dials with exponential backoff after a drop. Reconnection starts a
 * fresh server session (the bus has no replay), so consumers reset their
 * view on every successful connect.
 */

import { Envelope, encodeUtterance, parseEnvelope } from "./protocol.js";

export interface ClientCallbacks {
  onEnvelope: (envelope: Envelope) => void;
  onConnect: () => void;
  onDisconnect: () => void;
}

const BACKOFF_INITIAL_MS = 500;
const BACKOFF_MAX_MS = 10_000;

export class ConsoleClient {
  private socket: WebSocket | null = null;
  private backoffMs = BACKOFF_INITIAL_MS;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly callbacks: ClientCallbacks,
  ) {}

  connect(): void {
    if (this.closed) return;
    const socket = new WebSocket(this.url);
    this.socket = socket;

    socket.onopen = () => {
      this.backoffMs = BACKOFF_INITIAL_MS;
      this.callbacks.onConnect();
    };
    socket.onmessage = (event: MessageEvent) => {
      if (typeof event.data !== "string") return;
      let envelope: Envelope;
      try {
        envelope = parseEnvelope(event.data);
      } catch {
        return; // tolerate garbage frames; the next one may be fine
      }
      this.callbacks.onEnvelope(envelope);
    };
    socket.onclose = () => {
      this.socket = null;
      this.callbacks.onDisconnect();
      this.scheduleRetry();
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  private scheduleRetry(): void {
    if (this.closed || this.retryTimer !== null) return;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      this.connect();
    }, this.backoffMs);
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
  }

  send(text: string): boolean {
    if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.socket.send(encodeUtterance(text));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.socket?.close();
  }
}
