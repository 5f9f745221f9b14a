"""Reply backends: fixture parsing and the live chat-completion client."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from verba_arm.backends import (
    BackendError,
    BackendUnreachable,
    LiveBackend,
    ScriptedBackend,
    load_reply_fixture,
)
from verba_arm.dialogue import ChatMessage


class TestFixtureFormat:
    def test_blocks_split_on_separator_lines(self, tmp_path):
        path = tmp_path / "replies.txt"
        path.write_text(
            "Okay, what do you want me to grab first?\n"
            "---\n"
            "Grab [screw]\n"
            "---\n"
            "Move [0.2,0,1]\nDrop [screw]\n"
        )
        replies = load_reply_fixture(path)
        assert replies == [
            "Okay, what do you want me to grab first?",
            "Grab [screw]",
            "Move [0.2,0,1]\nDrop [screw]",
        ]

    def test_trailing_separator_and_blank_blocks_ignored(self, tmp_path):
        path = tmp_path / "replies.txt"
        path.write_text("one\n---\n\n---\ntwo\n---\n")
        assert load_reply_fixture(path) == ["one", "two"]

    def test_separator_requires_exact_dashes(self, tmp_path):
        path = tmp_path / "replies.txt"
        path.write_text("a --- b\n---\nnext\n")
        assert load_reply_fixture(path) == ["a --- b", "next"]

    def test_kth_reply_answers_kth_call(self, tmp_path):
        path = tmp_path / "replies.txt"
        path.write_text("first\n---\nsecond\n")
        backend = ScriptedBackend.from_file(path)
        assert backend.generate(()) == "first"
        assert backend.generate(()) == "second"


class _ChatHandler(BaseHTTPRequestHandler):
    requests: list[dict] = []
    status = 200
    reply = "Grab [screw]"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        doc = json.loads(self.rfile.read(length))
        type(self).requests.append(
            {"doc": doc, "auth": self.headers.get("Authorization")}
        )
        body = json.dumps(
            {"choices": [{"message": {"role": "assistant", "content": self.reply}}]}
        ).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.status == 200:
            self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    _ChatHandler.requests = []
    _ChatHandler.status = 200
    server = HTTPServer(("127.0.0.1", 0), _ChatHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()


class TestLiveBackend:
    MESSAGES = (
        ChatMessage("system", "be an arm"),
        ChatMessage("user", "give me the screw"),
    )

    def test_posts_provider_shape_and_reads_first_choice(self, chat_server):
        backend = LiveBackend(chat_server, model="arm-model", api_key="sk-test")
        reply = backend.generate(self.MESSAGES)
        assert reply == "Grab [screw]"
        sent = _ChatHandler.requests[0]
        assert sent["doc"]["model"] == "arm-model"
        assert sent["doc"]["messages"] == [
            {"role": "system", "content": "be an arm"},
            {"role": "user", "content": "give me the screw"},
        ]
        assert sent["auth"] == "Bearer sk-test"

    def test_api_key_from_environment(self, chat_server, monkeypatch):
        monkeypatch.setenv("VERBA_ARM_API_KEY", "sk-env")
        backend = LiveBackend(chat_server, model="m")
        backend.generate(self.MESSAGES)
        assert _ChatHandler.requests[-1]["auth"] == "Bearer sk-env"

    def test_missing_key_refused_up_front(self, monkeypatch):
        monkeypatch.delenv("VERBA_ARM_API_KEY", raising=False)
        with pytest.raises(BackendError):
            LiveBackend("http://127.0.0.1:1/x", model="m")

    def test_unreachable_endpoint(self):
        backend = LiveBackend(
            "http://127.0.0.1:9/none", model="m", api_key="k", timeout_s=0.5
        )
        with pytest.raises(BackendUnreachable):
            backend.generate(self.MESSAGES)

    def test_http_error_surfaces_as_unreachable(self, chat_server):
        _ChatHandler.status = 500
        backend = LiveBackend(chat_server, model="m", api_key="k")
        with pytest.raises(BackendUnreachable):
            backend.generate(self.MESSAGES)
