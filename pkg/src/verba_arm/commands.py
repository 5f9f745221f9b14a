"""Bracketed robot-command grammar: typed commands plus the text decoder.

The assistant controls the arm by emitting ``Grab [name]``, ``Move [x,y,z]``,
``Move [waypoint]`` and ``Drop [name]`` fragments inside otherwise free-form
text.  :func:`decode_reply` extracts them; any reply with no well-formed
command pattern is a conversational turn.  A malformed bracket group after a
command keyword rejects the whole reply, so a grab/move/drop chain is never
executed partially.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

__all__ = [
    "CartesianTarget",
    "Command",
    "CommandError",
    "Commands",
    "Conversation",
    "DecodedReply",
    "Drop",
    "EmptyReply",
    "Grab",
    "MalformedCommand",
    "Move",
    "MoveTarget",
    "NamedTarget",
    "decode_reply",
    "object_id",
    "render_command",
]


class CommandError(Exception):
    """Base class for grammar violations."""


class EmptyReply(CommandError):
    """The reply was empty or whitespace-only."""


class MalformedCommand(CommandError):
    """A command keyword was followed by an unparseable bracket group."""


_TOKEN_RE = re.compile(r"[a-z][a-z0-9_-]*", re.IGNORECASE)
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)")
_KEYWORD_RE = re.compile(r"\b(grab|move|drop)\s*\[", re.IGNORECASE)


def object_id(name: str) -> str:
    """Canonicalize an object/waypoint token: lowercase, letters-first form."""
    token = name.strip().lower()
    if not _TOKEN_RE.fullmatch(token):
        raise MalformedCommand(f"invalid token {name!r}")
    return token


@dataclass(frozen=True)
class CartesianTarget:
    """A point in the robot base frame, meters, z up."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise MalformedCommand(f"non-finite move component {v!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class NamedTarget:
    """A named waypoint such as ``back``."""

    waypoint: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "waypoint", object_id(self.waypoint))


MoveTarget = Union[CartesianTarget, NamedTarget]


@dataclass(frozen=True)
class Grab:
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", object_id(self.name))


@dataclass(frozen=True)
class Move:
    target: MoveTarget


@dataclass(frozen=True)
class Drop:
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", object_id(self.name))


Command = Union[Grab, Move, Drop]


@dataclass(frozen=True)
class Commands:
    """One or more commands, in the order they appeared in the reply text."""

    sequence: tuple[Command, ...]

    def __post_init__(self) -> None:
        if not self.sequence:
            raise ValueError("Commands requires at least one command")


@dataclass(frozen=True)
class Conversation:
    """A command-free reply, relayed verbatim to the operator."""

    text: str


DecodedReply = Union[Commands, Conversation]


def _parse_vector(body: str) -> tuple[float, float, float] | None:
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != 3:
        return None
    values = []
    for part in parts:
        if not _NUMBER_RE.fullmatch(part):
            return None
        values.append(float(part))
    return (values[0], values[1], values[2])


def _parse_token(body: str) -> str | None:
    token = body.strip()
    if _TOKEN_RE.fullmatch(token):
        return token.lower()
    return None


def _build_command(keyword: str, body: str) -> Command:
    vector = _parse_vector(body)
    token = _parse_token(body)
    if keyword == "move":
        if vector is not None:
            return Move(CartesianTarget(*vector))
        if token is not None:
            return Move(NamedTarget(token))
    elif token is not None:
        return Grab(token) if keyword == "grab" else Drop(token)
    raise MalformedCommand(f"cannot parse {keyword.capitalize()} [{body.strip()}]")


def decode_reply(text: str) -> DecodedReply:
    """Classify an assistant reply as a command sequence or conversation.

    Commands are matched case-insensitively on the keyword; whitespace inside
    the bracket group is ignored.  Raises :class:`EmptyReply` on blank input
    and :class:`MalformedCommand` when a keyword is followed by a bracket
    group that parses as neither a 3-vector nor a token; in that case the
    entire reply is rejected and nothing is returned for execution.
    """
    if not text.strip():
        raise EmptyReply("assistant reply is empty")

    commands: list[Command] = []
    for match in _KEYWORD_RE.finditer(text):
        keyword = match.group(1).lower()
        close = text.find("]", match.end())
        if close < 0:
            raise MalformedCommand(
                f"unterminated bracket group after {keyword.capitalize()!s}"
            )
        body = text[match.end() : close]
        if "[" in body:
            raise MalformedCommand(
                f"nested bracket after {keyword.capitalize()!s}"
            )
        commands.append(_build_command(keyword, body))

    if commands:
        return Commands(tuple(commands))
    return Conversation(text.rstrip("\n"))


def _format_decimal(value: float) -> str:
    """Shortest plain-decimal rendering that parses back to the same float.

    The grammar has no exponent notation, so values whose ``repr`` uses one
    are expanded to fixed-point with just enough digits to round-trip.
    """
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"cannot render non-finite component {v!r}")
    text = repr(v)
    if "e" not in text and "E" not in text:
        return text[:-2] if text.endswith(".0") else text
    for precision in range(1, 1100):
        candidate = f"{v:.{precision}f}"
        if float(candidate) == v:
            return candidate
    raise AssertionError("unreachable: fixed-point expansion failed")


def render_command(cmd: Command) -> str:
    """Canonical text form of a command; the round-trip inverse of decode."""
    if isinstance(cmd, Grab):
        return f"Grab [{cmd.name}]"
    if isinstance(cmd, Drop):
        return f"Drop [{cmd.name}]"
    if isinstance(cmd, Move):
        target = cmd.target
        if isinstance(target, NamedTarget):
            return f"Move [{target.waypoint}]"
        parts = ",".join(_format_decimal(c) for c in target.as_tuple())
        return f"Move [{parts}]"
    raise TypeError(f"not a command: {cmd!r}")
