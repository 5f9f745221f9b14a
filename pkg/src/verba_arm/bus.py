"""In-process publish-subscribe topic bus with a line-oriented wire form.

Topics are slash-delimited lowercase paths.  Every published envelope gets a
per-topic sequence number (strictly increasing, gap-free, starting at 1) and
a timestamp in milliseconds of simulated session time, so a replayed session
produces byte-identical envelopes.

The wire form is one canonical JSON object per line with keys ``topic``,
``seq``, ``ts_ms`` and ``payload``; ``decode_envelope(encode_envelope(e))``
is the identity.  There is no replay and no retained messages: the session
log file is the replay mechanism.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Iterator

__all__ = [
    "Bus",
    "BusError",
    "DecodeError",
    "Envelope",
    "MalformedPattern",
    "MalformedTopic",
    "Subscription",
    "TOPICS",
    "decode_envelope",
    "encode_envelope",
]

logger = logging.getLogger(__name__)

_TOPIC_RE = re.compile(r"[a-z0-9_]+(/[a-z0-9_]+)*")

#: Fixed topic catalog; each topic has a single writer by convention.
TOPICS = {
    "user/utterance": "operator text entering the session",
    "assistant/reply": "assistant text with its decoded classification",
    "robot/command": "canonical text of each command as it starts executing",
    "robot/state": "controller snapshot (pose, velocity, targets)",
    "scene/objects": "object registry snapshot",
    "exec/status": "execution plan status transitions",
    "session/event": "session lifecycle markers and diagnostics",
}

DEFAULT_QUEUE_LIMIT = 1024


class BusError(Exception):
    pass


class MalformedTopic(BusError):
    pass


class MalformedPattern(BusError):
    pass


class DecodeError(BusError):
    """A wire line failed to parse; ``offset`` is the character offset."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Envelope:
    topic: str
    seq: int
    ts_ms: int
    payload: Any


def encode_envelope(envelope: Envelope) -> str:
    """Canonical single-line JSON form (sorted keys, compact separators)."""
    return json.dumps(
        {
            "topic": envelope.topic,
            "seq": envelope.seq,
            "ts_ms": envelope.ts_ms,
            "payload": envelope.payload,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    )


def decode_envelope(line: str) -> Envelope:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"bad envelope line: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(doc, dict):
        raise DecodeError("envelope line must be a JSON object")
    missing = {"topic", "seq", "ts_ms", "payload"} - doc.keys()
    if missing:
        raise DecodeError(f"envelope missing fields {sorted(missing)}")
    topic, seq, ts_ms = doc["topic"], doc["seq"], doc["ts_ms"]
    if not (isinstance(topic, str) and _TOPIC_RE.fullmatch(topic)):
        raise DecodeError(f"malformed topic {topic!r}")
    if not (isinstance(seq, int) and not isinstance(seq, bool) and seq >= 1):
        raise DecodeError(f"bad seq {seq!r}")
    if not (isinstance(ts_ms, int) and not isinstance(ts_ms, bool) and ts_ms >= 0):
        raise DecodeError(f"bad ts_ms {ts_ms!r}")
    return Envelope(topic=topic, seq=seq, ts_ms=ts_ms, payload=doc["payload"])


def _pattern_matcher(pattern: str) -> Callable[[str], bool]:
    if pattern == "*":
        return lambda topic: True
    if pattern.endswith("/*"):
        prefix = pattern[:-2]
        if not _TOPIC_RE.fullmatch(prefix):
            raise MalformedPattern(f"bad pattern {pattern!r}")
        lead = prefix + "/"
        return lambda topic: topic.startswith(lead)
    if not _TOPIC_RE.fullmatch(pattern):
        raise MalformedPattern(f"bad pattern {pattern!r}")
    return lambda topic: topic == pattern


class Subscription:
    """Bounded envelope stream; consumable from any thread.

    If the queue overflows (a slow consumer), the subscription is dropped by
    the bus rather than ever blocking the publisher.
    """

    def __init__(self, pattern: str, limit: int):
        self.pattern = pattern
        self._matches = _pattern_matcher(pattern)
        self._limit = limit
        self._queue: deque[Envelope] = deque()
        self._cond = threading.Condition()
        self._closed = False
        self.overflowed = False

    def _offer(self, envelope: Envelope) -> bool:
        """Called by the bus under its own lock; False signals overflow."""
        with self._cond:
            if self._closed:
                return True
            if len(self._queue) >= self._limit:
                self.overflowed = True
                self._closed = True
                self._cond.notify_all()
                return False
            self._queue.append(envelope)
            self._cond.notify_all()
        return True

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def get(self, timeout: float | None = None) -> Envelope | None:
        """Next envelope, or None once closed and drained (or on timeout)."""
        with self._cond:
            if not self._queue and not self._closed:
                self._cond.wait(timeout)
            if self._queue:
                return self._queue.popleft()
            return None

    def poll(self) -> list[Envelope]:
        """All currently queued envelopes, without blocking."""
        with self._cond:
            items = list(self._queue)
            self._queue.clear()
        return items

    def __iter__(self) -> Iterator[Envelope]:
        while True:
            envelope = self.get()
            if envelope is None and self.closed:
                leftovers = self.poll()
                yield from leftovers
                return
            if envelope is not None:
                yield envelope


class Bus:
    """Topic bus owned by one session; publish from the simulation thread."""

    def __init__(
        self,
        clock: Callable[[], float] | None = None,
        queue_limit: int = DEFAULT_QUEUE_LIMIT,
    ):
        self._clock = clock or (lambda: 0.0)
        self._queue_limit = queue_limit
        self._seq: dict[str, int] = {}
        self._subs: list[Subscription] = []
        self._taps: list[Callable[[Envelope], None]] = []
        self._lock = threading.Lock()

    def publish(self, topic: str, payload: Any) -> Envelope:
        """Stamp, deliver to matching subscribers in order, and return."""
        if not _TOPIC_RE.fullmatch(topic or ""):
            raise MalformedTopic(f"malformed topic {topic!r}")
        with self._lock:
            seq = self._seq.get(topic, 0) + 1
            self._seq[topic] = seq
            envelope = Envelope(
                topic=topic,
                seq=seq,
                ts_ms=int(round(self._clock() * 1000.0)),
                payload=payload,
            )
            dead: list[Subscription] = []
            for sub in self._subs:
                if sub._matches(topic) and not sub._offer(envelope):
                    dead.append(sub)
            for sub in dead:
                logger.warning(
                    "dropping slow subscriber on %r (queue > %d)",
                    sub.pattern,
                    self._queue_limit,
                )
                self._subs.remove(sub)
            taps = list(self._taps)
        for tap in taps:
            tap(envelope)
        return envelope

    def subscribe(self, pattern: str, limit: int | None = None) -> Subscription:
        """Stream envelopes published after this call that match ``pattern``.

        ``pattern`` is an exact topic, a prefix wildcard like ``robot/*``, or
        ``*`` for everything.
        """
        sub = Subscription(pattern, limit or self._queue_limit)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)
        sub.close()

    def add_tap(self, tap: Callable[[Envelope], None]) -> None:
        """Synchronous observer for same-thread consumers (logging, printing)."""
        with self._lock:
            self._taps.append(tap)

    def remove_tap(self, tap: Callable[[Envelope], None]) -> None:
        with self._lock:
            if tap in self._taps:
                self._taps.remove(tap)
