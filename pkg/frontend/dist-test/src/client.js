/**
 * Reconnecting WebSocket client for the envelope stream.
 *
 * Re-dials with exponential backoff after a drop. Reconnection starts a
 * fresh server session (the bus has no replay), so consumers reset their
 * view on every successful connect.
 */
import { encodeUtterance, parseEnvelope } from "./protocol.js";
const BACKOFF_INITIAL_MS = 500;
const BACKOFF_MAX_MS = 10000;
export class ConsoleClient {
    constructor(url, callbacks) {
        this.url = url;
        this.callbacks = callbacks;
        this.socket = null;
        this.backoffMs = BACKOFF_INITIAL_MS;
        this.closed = false;
        this.retryTimer = null;
    }
    connect() {
        if (this.closed)
            return;
        const socket = new WebSocket(this.url);
        this.socket = socket;
        socket.onopen = () => {
            this.backoffMs = BACKOFF_INITIAL_MS;
            this.callbacks.onConnect();
        };
        socket.onmessage = (event) => {
            if (typeof event.data !== "string")
                return;
            let envelope;
            try {
                envelope = parseEnvelope(event.data);
            }
            catch {
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
    scheduleRetry() {
        if (this.closed || this.retryTimer !== null)
            return;
        this.retryTimer = setTimeout(() => {
            this.retryTimer = null;
            this.connect();
        }, this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    }
    send(text) {
        if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) {
            return false;
        }
        this.socket.send(encodeUtterance(text));
        return true;
    }
    close() {
        this.closed = true;
        if (this.retryTimer !== null)
            clearTimeout(this.retryTimer);
        this.socket?.close();
    }
}
