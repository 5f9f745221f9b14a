"""Network bridges for live operation: one port, three client styles.

Every accepted connection is sniffed: lines that start like an HTTP request
get either the WebSocket upgrade (path ``/ws``, one envelope per text frame)
or static-asset serving (the operator console); anything else is treated as
the raw TCP bridge speaking newline-delimited envelopes.

Each connection gets its own independent session (its own bus, controller,
scene and sequence counters).  Telemetry flows server -> client; the only
client -> server message is ``{"topic": "user/utterance", "payload":
{"text": ...}}``.  A malformed client line produces a diagnostic envelope on
``session/event`` and the connection stays open.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import socket
import struct
import threading
from pathlib import Path
from typing import Callable

from .backends import BackendError
from .bus import encode_envelope
from .dialogue import DialogueError
from .session import Session

__all__ = ["BridgeServer", "PortInUse", "ServerError"]

logger = logging.getLogger(__name__)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class ServerError(Exception):
    pass


class PortInUse(ServerError):
    pass


class BridgeServer:
    """Accept loop plus per-connection reader/writer threads."""

    def __init__(
        self,
        session_factory: Callable[[str], Session],
        host: str = "127.0.0.1",
        port: int = 8765,
        static_dir: str | Path | None = None,
    ):
        self.session_factory = session_factory
        self.host = host
        self.static_dir = Path(static_dir) if static_dir else None
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind((host, port))
        except OSError as exc:
            self._sock.close()
            raise PortInUse(f"cannot bind {host}:{port}: {exc}") from exc
        self._sock.listen(16)
        self.port = self._sock.getsockname()[1]
        self._running = False
        self._accept_thread: threading.Thread | None = None
        self._session_counter = 0
        self._counter_lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._running = True
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="bridge-accept", daemon=True
        )
        self._accept_thread.start()

    def stop(self) -> None:
        self._running = False
        try:
            self._sock.close()
        except OSError:
            pass

    def serve_forever(self) -> None:
        self.start()
        assert self._accept_thread is not None
        try:
            while self._accept_thread.is_alive():
                self._accept_thread.join(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, addr = self._sock.accept()
            except OSError:
                return
            thread = threading.Thread(
                target=self._handle_connection,
                args=(conn, addr),
                name=f"bridge-conn-{addr[1]}",
                daemon=True,
            )
            thread.start()

    def _next_session_id(self) -> str:
        with self._counter_lock:
            self._session_counter += 1
            return f"live-{self._session_counter:04d}"

    # -- connection dispatch -------------------------------------------------

    def _handle_connection(self, conn: socket.socket, addr) -> None:
        try:
            # HTTP clients (static and WebSocket) send their request right
            # away; a raw TCP telemetry client may connect silently and just
            # listen, so the sniff must not wait on it.
            conn.settimeout(0.25)
            try:
                head = conn.recv(4, socket.MSG_PEEK)
            except (socket.timeout, TimeoutError):
                head = b""
            if head and (
                head[:4] in (b"GET ", b"POST", b"HEAD", b"OPTI", b"PUT ")
                or head[:3] == b"GET"
            ):
                conn.settimeout(10.0)
                self._handle_http(conn)
            else:
                conn.settimeout(None)
                self._run_session(conn, _LineTransport(conn))
        except Exception:
            logger.exception("connection from %s failed", addr)
            try:
                conn.close()
            except OSError:
                pass

    # -- HTTP / WebSocket ------------------------------------------------------

    def _handle_http(self, conn: socket.socket) -> None:
        request = _read_http_request(conn)
        if request is None:
            conn.close()
            return
        method, path, headers = request
        if path.split("?")[0] == "/ws":
            key = headers.get("sec-websocket-key")
            if method != "GET" or not key or "websocket" not in headers.get("upgrade", "").lower():
                _http_simple(conn, 400, "expected a WebSocket upgrade on /ws")
                conn.close()
                return
            accept = base64.b64encode(
                hashlib.sha1((key + WS_GUID).encode()).digest()
            ).decode()
            conn.sendall(
                (
                    "HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {accept}\r\n"
                    "\r\n"
                ).encode()
            )
            conn.settimeout(None)
            self._run_session(conn, _WebSocketTransport(conn))
            return
        self._serve_static(conn, method, path.split("?")[0])

    def _serve_static(self, conn: socket.socket, method: str, path: str) -> None:
        try:
            if method not in ("GET", "HEAD"):
                _http_simple(conn, 405, "method not allowed")
                return
            if self.static_dir is None or not self.static_dir.is_dir():
                _http_simple(conn, 404, "no console assets configured")
                return
            relative = path.lstrip("/") or "index.html"
            target = (self.static_dir / relative).resolve()
            root = self.static_dir.resolve()
            if root not in target.parents and target != root:
                _http_simple(conn, 403, "forbidden")
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                _http_simple(conn, 404, f"not found: {path}")
                return
            body = target.read_bytes()
            content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            header = (
                "HTTP/1.1 200 OK\r\n"
                f"Content-Type: {content_type}\r\n"
                f"Content-Length: {len(body)}\r\n"
                "Connection: close\r\n"
                "\r\n"
            ).encode()
            conn.sendall(header + (b"" if method == "HEAD" else body))
        finally:
            conn.close()

    # -- the shared session loop -----------------------------------------------

    def _run_session(self, conn: socket.socket, transport: "_Transport") -> None:
        session = self.session_factory(self._next_session_id())
        subscription = session.bus.subscribe("*", limit=4096)
        stop = threading.Event()

        def writer() -> None:
            try:
                while not stop.is_set():
                    envelope = subscription.get(timeout=0.25)
                    if envelope is None:
                        if subscription.closed:
                            return
                        continue
                    transport.send_line(encode_envelope(envelope))
            except OSError:
                pass
            finally:
                stop.set()

        writer_thread = threading.Thread(target=writer, daemon=True)
        writer_thread.start()
        try:
            session.start()
            while not stop.is_set():
                line = transport.recv_line()
                if line is None:
                    break
                line = line.strip()
                if not line:
                    continue
                self._dispatch_client_line(session, line)
        except OSError:
            pass
        finally:
            stop.set()
            try:
                session.end()
            except Exception:
                logger.exception("session teardown failed")
            session.bus.unsubscribe(subscription)
            writer_thread.join(timeout=2.0)
            transport.close()

    def _dispatch_client_line(self, session: Session, line: str) -> None:
        def complain(message: str) -> None:
            session.bus.publish(
                "session/event", {"event": "client_error", "error": message}
            )

        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            complain(f"unparseable client line: {exc.msg}")
            return
        if not isinstance(doc, dict) or doc.get("topic") != "user/utterance":
            complain("client lines must carry topic user/utterance")
            return
        payload = doc.get("payload")
        text = payload.get("text") if isinstance(payload, dict) else None
        if not isinstance(text, str) or not text.strip():
            complain("user/utterance payload needs non-empty text")
            return
        try:
            session.handle_utterance(text)
        except (DialogueError, BackendError) as exc:
            complain(f"{type(exc).__name__}: {exc}")


# -- transports ---------------------------------------------------------------


class _Transport:
    def send_line(self, line: str) -> None:
        raise NotImplementedError

    def recv_line(self) -> str | None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _LineTransport(_Transport):
    """Newline-delimited UTF-8 over a plain TCP socket."""

    def __init__(self, conn: socket.socket):
        self._conn = conn
        self._recv_buffer = b""
        self._send_lock = threading.Lock()

    def send_line(self, line: str) -> None:
        with self._send_lock:
            self._conn.sendall(line.encode("utf-8") + b"\n")

    def recv_line(self) -> str | None:
        while b"\n" not in self._recv_buffer:
            chunk = self._conn.recv(65536)
            if not chunk:
                return None
            self._recv_buffer += chunk
        line, self._recv_buffer = self._recv_buffer.split(b"\n", 1)
        return line.decode("utf-8", errors="replace")

    def close(self) -> None:
        try:
            self._conn.close()
        except OSError:
            pass


class _WebSocketTransport(_Transport):
    """Server-side RFC 6455 text frames, one envelope per frame."""

    def __init__(self, conn: socket.socket):
        self._conn = conn
        self._send_lock = threading.Lock()

    def send_line(self, line: str) -> None:
        self._send_frame(0x1, line.encode("utf-8"))

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        head = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head += bytes([n])
        elif n < 1 << 16:
            head += bytes([126]) + struct.pack(">H", n)
        else:
            head += bytes([127]) + struct.pack(">Q", n)
        with self._send_lock:
            self._conn.sendall(head + payload)

    def _read_exact(self, n: int) -> bytes | None:
        data = b""
        while len(data) < n:
            chunk = self._conn.recv(n - len(data))
            if not chunk:
                return None
            data += chunk
        return data

    def recv_line(self) -> str | None:
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                ext = self._read_exact(2)
                if ext is None:
                    return None
                length = struct.unpack(">H", ext)[0]
            elif length == 127:
                ext = self._read_exact(8)
                if ext is None:
                    return None
                length = struct.unpack(">Q", ext)[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            if mask is None:
                return None
            payload = self._read_exact(length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                try:
                    self._send_frame(0x8, b"")
                except OSError:
                    pass
                return None
            if opcode == 0x9:  # ping
                self._send_frame(0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8", errors="replace")
            # continuation/pong and anything else: skip

    def close(self) -> None:
        try:
            self._send_frame(0x8, b"")
        except OSError:
            pass
        try:
            self._conn.close()
        except OSError:
            pass


# -- tiny HTTP helpers -----------------------------------------------------


def _read_http_request(conn: socket.socket) -> tuple[str, str, dict[str, str]] | None:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = conn.recv(65536)
        if not chunk:
            return None
        data += chunk
        if len(data) > 1 << 20:
            return None
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    parts = lines[0].split()
    if len(parts) < 3:
        return None
    method, path = parts[0], parts[1]
    headers: dict[str, str] = {}
    for line in lines[1:]:
        if ":" in line:
            key, value = line.split(":", 1)
            headers[key.strip().lower()] = value.strip()
    return method, path, headers


def _http_simple(conn: socket.socket, status: int, message: str) -> None:
    reasons = {200: "OK", 400: "Bad Request", 403: "Forbidden",
               404: "Not Found", 405: "Method Not Allowed"}
    body = (message + "\n").encode("utf-8")
    conn.sendall(
        (
            f"HTTP/1.1 {status} {reasons.get(status, 'Error')}\r\n"
            "Content-Type: text/plain; charset=utf-8\r\n"
            f"Content-Length: {len(body)}\r\n"
            "Connection: close\r\n"
            "\r\n"
        ).encode()
        + body
    )
