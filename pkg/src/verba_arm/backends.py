"""Pluggable reply generators behind the dialogue layer.

Three implementations of the same one-method port: a deterministic scripted
backend replaying fixture replies (the test workhorse), a live HTTP
chat-completion client, and an echo backend for grammar diagnostics.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from pathlib import Path
from typing import Protocol, Sequence

from .dialogue import ChatMessage

__all__ = [
    "API_KEY_ENV",
    "BackendError",
    "BackendUnreachable",
    "EchoBackend",
    "LiveBackend",
    "LlmBackend",
    "ScriptExhausted",
    "ScriptedBackend",
    "load_reply_fixture",
]

API_KEY_ENV = "VERBA_ARM_API_KEY"


class BackendError(Exception):
    """Base class for reply-generation failures."""


class ScriptExhausted(BackendError):
    """The scripted fixture ran out of replies."""


class BackendUnreachable(BackendError):
    """The live endpoint could not be reached or answered malformed data."""


class LlmBackend(Protocol):
    def generate(self, messages: Sequence[ChatMessage]) -> str:
        """Produce the next assistant reply for the given transcript window."""
        ...


def load_reply_fixture(path: str | Path) -> list[str]:
    """Parse a reply fixture: blocks separated by lines containing only ---."""
    text = Path(path).read_text(encoding="utf-8")
    replies: list[str] = []
    block: list[str] = []

    def flush() -> None:
        reply = "\n".join(block).strip("\n")
        if reply:
            replies.append(reply)
        block.clear()

    for line in text.splitlines():
        if line.strip() == "---":
            flush()
        else:
            block.append(line)
    flush()
    return replies


class ScriptedBackend:
    """Replays a fixed reply list; call k gets reply k.  Fully deterministic."""

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self._cursor = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls(load_reply_fixture(path))

    @property
    def remaining(self) -> int:
        return len(self._replies) - self._cursor

    def generate(self, messages: Sequence[ChatMessage]) -> str:
        if self._cursor >= len(self._replies):
            raise ScriptExhausted(
                f"scripted backend exhausted after {len(self._replies)} replies"
            )
        reply = self._replies[self._cursor]
        self._cursor += 1
        return reply


class EchoBackend:
    """Returns the last user utterance; lets an operator type commands directly."""

    def generate(self, messages: Sequence[ChatMessage]) -> str:
        for message in reversed(messages):
            if message.role == "user":
                return message.content
        raise BackendError("echo backend needs at least one user message")


class LiveBackend:
    """Chat-completion HTTP client speaking the provider-standard shape.

    POSTs ``{"model": ..., "messages": [{"role", "content"}, ...]}`` and reads
    the first choice's message content.  The API key comes from the
    ``VERBA_ARM_API_KEY`` environment variable and is never logged.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout_s: float = 30.0,
        api_key: str | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout_s = timeout_s
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not key:
            raise BackendError(
                f"live backend requires the {API_KEY_ENV} environment variable"
            )
        self._api_key = key

    def generate(self, messages: Sequence[ChatMessage]) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._api_key}",
            },
            method="POST",
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                body = response.read().decode("utf-8")
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise BackendUnreachable(f"chat endpoint unreachable: {exc}") from exc
        try:
            doc = json.loads(body)
            content = doc["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnreachable(f"malformed chat response: {exc}") from exc
        if not isinstance(content, str):
            raise BackendUnreachable("chat response content is not text")
        return content
