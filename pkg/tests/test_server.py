"""Wire bridges: raw TCP lines, WebSocket frames, static assets, bad input."""

from __future__ import annotations

import base64
import hashlib
import json
import os
import socket
import struct
import time

import pytest

from verba_arm.backends import ScriptedBackend
from verba_arm.scene import Scene
from verba_arm.server import BridgeServer, PortInUse, WS_GUID
from verba_arm.session import Session, SessionSettings


def make_scene() -> Scene:
    return Scene.from_objects(
        objects={"screw": (0.5, 0.3, 0.1)},
        waypoints={"back": (-0.5, -0.4, 0.2), "operator": (0.2, 0.0, 1.0)},
    )


def session_factory(session_id: str) -> Session:
    return Session(
        session_id=session_id,
        scene=make_scene(),
        backend=ScriptedBackend(["Grab [screw]"] * 4),
        settings=SessionSettings(state_publish_hz=10.0),
    )


@pytest.fixture
def server(tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>console</body></html>")
    (static / "app.js").write_text("export const x = 1;\n")
    srv = BridgeServer(session_factory, port=0, static_dir=static)
    srv.start()
    yield srv
    srv.stop()


def read_lines(sock: socket.socket, want: int, timeout: float = 10.0) -> list[str]:
    sock.settimeout(timeout)
    buffer = b""
    lines: list[str] = []
    deadline = time.monotonic() + timeout
    while len(lines) < want and time.monotonic() < deadline:
        try:
            chunk = sock.recv(65536)
        except socket.timeout:
            break
        if not chunk:
            break
        buffer += chunk
        while b"\n" in buffer and len(lines) < want:
            raw, buffer = buffer.split(b"\n", 1)
            lines.append(raw.decode())
    return lines


class TestTcpBridge:
    def test_utterance_round_trip(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            # the session greets with start/scene/state envelopes
            preamble = read_lines(sock, 3)
            topics = [json.loads(line)["topic"] for line in preamble]
            assert topics[0] == "session/event"
            assert set(topics) >= {"session/event", "scene/objects", "robot/state"}
            sock.sendall(
                json.dumps(
                    {"topic": "user/utterance", "payload": {"text": "fetch the screw"}}
                ).encode()
                + b"\n"
            )
            lines = read_lines(sock, 200)
            seen = [json.loads(line) for line in lines]
            kinds = {doc["topic"] for doc in seen}
            assert {"user/utterance", "assistant/reply", "robot/command",
                    "robot/state", "exec/status"} <= kinds
            done = [
                doc for doc in seen
                if doc["topic"] == "exec/status" and doc["payload"].get("state") == "done"
            ]
            assert done, "execution must complete over the bridge"
            # per-topic seq is monotone and gap-free from the first envelope on
            per_topic: dict[str, int] = {}
            for doc in [json.loads(line) for line in preamble] + seen:
                last = per_topic.get(doc["topic"], 0)
                assert doc["seq"] == last + 1
                per_topic[doc["topic"]] = doc["seq"]

    def test_malformed_line_keeps_connection(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            read_lines(sock, 3)
            sock.sendall(b"this is not json\n")
            line = read_lines(sock, 1)
            doc = json.loads(line[0])
            assert doc["topic"] == "session/event"
            assert doc["payload"]["event"] == "client_error"
            # still alive: a valid utterance works afterwards
            sock.sendall(
                json.dumps(
                    {"topic": "user/utterance", "payload": {"text": "go"}}
                ).encode()
                + b"\n"
            )
            follow = read_lines(sock, 2)
            assert follow

    def test_two_connections_get_independent_sessions(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as a:
            with socket.create_connection(("127.0.0.1", server.port), timeout=5) as b:
                first_a = json.loads(read_lines(a, 1)[0])
                first_b = json.loads(read_lines(b, 1)[0])
                assert first_a["payload"]["session_id"] != first_b["payload"]["session_id"]
                assert first_a["seq"] == 1 and first_b["seq"] == 1


def ws_handshake(sock: socket.socket, port: int) -> None:
    key = base64.b64encode(os.urandom(16)).decode()
    sock.sendall(
        (
            f"GET /ws HTTP/1.1\r\nHost: 127.0.0.1:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        ).encode()
    )
    response = b""
    while b"\r\n\r\n" not in response:
        response += sock.recv(4096)
    head = response.split(b"\r\n\r\n", 1)[0].decode()
    assert "101" in head.split("\r\n")[0]
    expected = base64.b64encode(
        hashlib.sha1((key + WS_GUID).encode()).digest()
    ).decode()
    assert f"Sec-WebSocket-Accept: {expected}" in head


def ws_send_text(sock: socket.socket, text: str) -> None:
    payload = text.encode()
    mask = os.urandom(4)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    n = len(payload)
    if n < 126:
        header = bytes([0x81, 0x80 | n])
    else:
        header = bytes([0x81, 0x80 | 126]) + struct.pack(">H", n)
    sock.sendall(header + mask + masked)


def ws_read_frames(sock: socket.socket, want: int, timeout: float = 10.0) -> list[str]:
    sock.settimeout(timeout)
    frames: list[str] = []
    buffer = b""

    def need(n: int) -> bool:
        nonlocal buffer
        while len(buffer) < n:
            try:
                chunk = sock.recv(65536)
            except socket.timeout:
                return False
            if not chunk:
                return False
            buffer += chunk
        return True

    while len(frames) < want:
        if not need(2):
            break
        length = buffer[1] & 0x7F
        offset = 2
        if length == 126:
            if not need(4):
                break
            length = struct.unpack(">H", buffer[2:4])[0]
            offset = 4
        elif length == 127:
            if not need(10):
                break
            length = struct.unpack(">Q", buffer[2:10])[0]
            offset = 10
        if not need(offset + length):
            break
        opcode = buffer[0] & 0x0F
        payload = buffer[offset : offset + length]
        buffer = buffer[offset + length :]
        if opcode == 0x1:
            frames.append(payload.decode())
    return frames


class TestWebSocketBridge:
    def test_handshake_and_envelope_stream(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            ws_handshake(sock, server.port)
            preamble = ws_read_frames(sock, 3)
            assert json.loads(preamble[0])["topic"] == "session/event"
            ws_send_text(
                sock,
                json.dumps({"topic": "user/utterance", "payload": {"text": "go"}}),
            )
            frames = ws_read_frames(sock, 50)
            topics = {json.loads(f)["topic"] for f in frames}
            assert "assistant/reply" in topics
            assert "robot/state" in topics

    def test_bad_upgrade_is_400(self, server):
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            sock.sendall(b"GET /ws HTTP/1.1\r\nHost: x\r\n\r\n")
            response = sock.recv(4096).decode()
            assert response.startswith("HTTP/1.1 400")


class TestStatic:
    def fetch(self, server, path: str) -> tuple[str, bytes]:
        with socket.create_connection(("127.0.0.1", server.port), timeout=5) as sock:
            sock.sendall(f"GET {path} HTTP/1.1\r\nHost: x\r\n\r\n".encode())
            data = b""
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                data += chunk
        head, body = data.split(b"\r\n\r\n", 1)
        return head.decode(), body

    def test_index_served_at_root(self, server):
        head, body = self.fetch(server, "/")
        assert "200" in head and b"console" in body
        assert "text/html" in head

    def test_js_content_type(self, server):
        head, _ = self.fetch(server, "/app.js")
        assert "text/javascript" in head

    def test_missing_file_404(self, server):
        head, _ = self.fetch(server, "/nope.js")
        assert "404" in head

    def test_path_escape_rejected(self, server):
        head, _ = self.fetch(server, "/../../etc/passwd")
        assert "403" in head or "404" in head


class TestPortHandling:
    def test_port_in_use_raises(self, server):
        with pytest.raises(PortInUse):
            BridgeServer(session_factory, port=server.port)
