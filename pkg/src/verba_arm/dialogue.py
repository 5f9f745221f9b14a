"""Conversation state machine: prompt assembly, turn taking, session memory.

One dialogue session owns a transcript with strict user/assistant
alternation and a three-phase loop: AwaitingUser -> AwaitingAssistant ->
(Relay back to AwaitingUser, or Execute -> Executing -> AwaitingUser).
Replies that decode to commands produce Execute effects; command-free
replies are clarification turns relayed to the operator; undecodable
replies degrade to an apology relay so a misbehaving model can never crash
the session.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .commands import (
    Command,
    CommandError,
    Commands,
    Conversation,
    Drop,
    Move,
    MoveTarget,
    decode_reply,
)

__all__ = [
    "BackendRequest",
    "ChatMessage",
    "DEFAULT_WINDOW_TURNS",
    "DialogueError",
    "DialogueSession",
    "Effect",
    "EmptyUtterance",
    "Execute",
    "InvalidExample",
    "Phase",
    "Relay",
    "SessionMemory",
    "Transcript",
    "WrongPhase",
    "build_system_prompt",
]

DEFAULT_WINDOW_TURNS = 20

APOLOGY_TEMPLATE = (
    "Sorry, I could not turn that into valid robot commands ({reason}). "
    "Could you rephrase?"
)


class DialogueError(Exception):
    """Base class for dialogue protocol violations."""


class WrongPhase(DialogueError):
    pass


class EmptyUtterance(DialogueError):
    pass


class InvalidExample(DialogueError):
    """A sample dialogue contains an assistant line the grammar rejects."""


class Phase(enum.Enum):
    AWAITING_USER = "awaiting_user"
    AWAITING_ASSISTANT = "awaiting_assistant"
    EXECUTING = "executing"


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self) -> None:
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if self.role != "system" and not self.content:
            raise ValueError(f"{self.role} message must have content")


class Transcript:
    """Ordered chat history; at most one system message, first; strict
    user/assistant alternation after it."""

    def __init__(self, system: str | None = None):
        self._messages: list[ChatMessage] = []
        if system is not None:
            self._messages.append(ChatMessage("system", system))

    @property
    def messages(self) -> tuple[ChatMessage, ...]:
        return tuple(self._messages)

    def _last_speaker(self) -> str | None:
        for message in reversed(self._messages):
            if message.role != "system":
                return message.role
        return None

    def append_user(self, content: str) -> None:
        if self._last_speaker() == "user":
            raise DialogueError("user turns must alternate with assistant turns")
        self._messages.append(ChatMessage("user", content))

    def append_assistant(self, content: str) -> None:
        if self._last_speaker() != "user":
            raise DialogueError("assistant turn requires a preceding user turn")
        self._messages.append(ChatMessage("assistant", content))

    def retract_last_user(self) -> None:
        """Drop a trailing user turn (backend failed; the operator will retry)."""
        if self._messages and self._messages[-1].role == "user":
            self._messages.pop()

    def window(self, max_turns: int) -> list[ChatMessage]:
        """System message plus the most recent ``max_turns`` turns.

        The suffix is trimmed so the first retained turn is a user turn,
        keeping alternation intact for the model.
        """
        if max_turns < 2:
            raise ValueError("max_turns must be at least 2")
        system = [m for m in self._messages if m.role == "system"]
        turns = [m for m in self._messages if m.role != "system"]
        tail = turns[-max_turns:]
        while tail and tail[0].role == "assistant":
            tail = tail[1:]
        return system + tail


@dataclass
class SessionMemory:
    """What the assistant is expected to remember across turns."""

    named_waypoints: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    last_delivery: MoveTarget | None = None


@dataclass(frozen=True)
class BackendRequest:
    """Context window handed to the reply generator."""

    messages: tuple[ChatMessage, ...]


@dataclass(frozen=True)
class Relay:
    """Show this text to the operator and wait for their next utterance.

    ``kind`` is "conversation" for genuine clarification turns and "error"
    when the reply was undecodable and the text is the apology diagnostic.
    """

    text: str
    kind: str = "conversation"


@dataclass(frozen=True)
class Execute:
    """Run this command sequence on the arm."""

    sequence: tuple[Command, ...]
    raw_reply: str


Effect = Relay | Execute


class DialogueSession:
    """Single-owner conversation state; one session per operator."""

    def __init__(
        self,
        system_prompt: str | None = None,
        memory: SessionMemory | None = None,
        window_turns: int = DEFAULT_WINDOW_TURNS,
    ):
        self.transcript = Transcript(system_prompt)
        self.memory = memory or SessionMemory()
        self.phase = Phase.AWAITING_USER
        self.window_turns = window_turns

    def submit_utterance(self, text: str) -> BackendRequest:
        """Record an operator utterance and produce the backend request."""
        if self.phase is not Phase.AWAITING_USER:
            raise WrongPhase(f"cannot submit while {self.phase.value}")
        if not text.strip():
            raise EmptyUtterance("utterance is empty")
        self.transcript.append_user(text)
        self.phase = Phase.AWAITING_ASSISTANT
        return BackendRequest(tuple(self.transcript.window(self.window_turns)))

    def ingest_reply(self, reply: str) -> Effect:
        """Classify an assistant reply and transition the phase machine.

        Decode errors never propagate: the session records and relays an
        apology so the operator can simply try again.
        """
        if self.phase is not Phase.AWAITING_ASSISTANT:
            raise WrongPhase(f"cannot ingest while {self.phase.value}")
        try:
            decoded = decode_reply(reply)
        except CommandError as exc:
            apology = APOLOGY_TEMPLATE.format(reason=exc)
            self.transcript.append_assistant(apology)
            self.phase = Phase.AWAITING_USER
            return Relay(apology, kind="error")

        if isinstance(decoded, Conversation):
            self.transcript.append_assistant(reply.rstrip("\n"))
            self.phase = Phase.AWAITING_USER
            return Relay(decoded.text)

        assert isinstance(decoded, Commands)
        self.transcript.append_assistant(reply.rstrip("\n"))
        self.phase = Phase.EXECUTING
        self._remember_delivery(decoded.sequence)
        return Execute(decoded.sequence, reply)

    def complete_execution(self) -> None:
        """Return to the operator after the executor reports a terminal status."""
        if self.phase is not Phase.EXECUTING:
            raise WrongPhase(f"cannot complete execution while {self.phase.value}")
        self.phase = Phase.AWAITING_USER

    def retract_utterance(self) -> None:
        """Undo a submit whose backend call failed, so the turn can be retried."""
        if self.phase is not Phase.AWAITING_ASSISTANT:
            raise WrongPhase(f"nothing to retract while {self.phase.value}")
        self.transcript.retract_last_user()
        self.phase = Phase.AWAITING_USER

    def transcript_window(self, max_turns: int | None = None) -> list[ChatMessage]:
        return self.transcript.window(max_turns or self.window_turns)

    def _remember_delivery(self, sequence: tuple[Command, ...]) -> None:
        # A delivery is a trailing Move-then-Drop; remember where it went.
        if len(sequence) >= 2 and isinstance(sequence[-1], Drop):
            prior = sequence[-2]
            if isinstance(prior, Move):
                self.memory.last_delivery = prior.target


def build_system_prompt(
    scene_manifest: Sequence[str],
    waypoints: Mapping[str, tuple[float, float, float]] | Iterable[str],
    examples: Sequence[tuple[str, str]] = (),
) -> str:
    """Assemble the conditioning prompt: role, scene, grammar, sample dialogues.

    Every assistant line in ``examples`` must decode cleanly (as commands or
    as conversation); otherwise InvalidExample is raised so that a bad sample
    can never teach the model a form the decoder would reject.
    """
    if not scene_manifest:
        raise ValueError("scene manifest must list at least one object")
    for _, assistant_line in examples:
        try:
            decode_reply(assistant_line)
        except CommandError as exc:
            raise InvalidExample(
                f"sample assistant line {assistant_line!r} fails the grammar: {exc}"
            ) from exc

    waypoint_names = sorted(
        waypoints.keys() if isinstance(waypoints, Mapping) else waypoints
    )
    objects = ", ".join(sorted(scene_manifest))
    lines = [
        "You are a robot arm control assistant for a desk-scale pick-and-place "
        "workcell. You help the operator by fetching and delivering tools.",
        "",
        f"Objects present in the workspace: {objects}.",
        f"Named waypoints you can move to: {', '.join(waypoint_names)}.",
        "",
        "To act, reply with commands in exactly this form:",
        "  Grab [object]",
        "  Move [x,y,z]   (meters, robot base frame)",
        "  Move [waypoint]",
        "  Drop [object]",
        "Several commands may be chained in one reply and run in order.",
        "Only the three verbs above exist. Never invent other commands.",
        "",
        "If a request is ambiguous or names something not in the workspace, "
        "do not act; ask the operator a clarifying question instead.",
        "If the operator asks for a delivery to the same place as before, "
        "repeat the previous Move vector.",
    ]
    if examples:
        lines.append("")
        lines.append("Sample conversations:")
        for user_line, assistant_line in examples:
            lines.append(f"  Operator: {user_line}")
            lines.append(f"  Assistant: {assistant_line}")
    return "\n".join(lines)
