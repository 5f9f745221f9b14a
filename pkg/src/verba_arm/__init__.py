"""Conversational pick-and-place control of a simulated 7-axis arm.

The pipeline: operator text -> dialogue state machine -> pluggable reply
backend -> command grammar decoder -> plan expansion -> dual-stage impedance
controller -> pub-sub telemetry, with batch statistics over the session logs.
"""

from .backends import EchoBackend, LiveBackend, LlmBackend, ScriptedBackend
from .bus import Bus, Envelope, decode_envelope, encode_envelope
from .commands import (
    CartesianTarget,
    Command,
    Commands,
    Conversation,
    Drop,
    Grab,
    Move,
    NamedTarget,
    decode_reply,
    render_command,
)
from .controller import ArmController, Box, ImpedanceGains, torque
from .dialogue import (
    ChatMessage,
    DialogueSession,
    Execute,
    Relay,
    SessionMemory,
    build_system_prompt,
)
from .executor import ExecutionPlan, Executor, plan
from .scenario import Scenario, run_scenario
from .scene import Scene, SceneObject
from .session import Session, SessionSettings
from .stats import ad_normality, paired_t, performance_scores, welch_t

__version__ = "0.1.0"

__all__ = [
    "ArmController",
    "Box",
    "Bus",
    "CartesianTarget",
    "ChatMessage",
    "Command",
    "Commands",
    "Conversation",
    "DialogueSession",
    "Drop",
    "EchoBackend",
    "Envelope",
    "Execute",
    "ExecutionPlan",
    "Executor",
    "Grab",
    "ImpedanceGains",
    "LiveBackend",
    "LlmBackend",
    "Move",
    "NamedTarget",
    "Relay",
    "Scenario",
    "Scene",
    "SceneObject",
    "Session",
    "SessionMemory",
    "SessionSettings",
    "ad_normality",
    "build_system_prompt",
    "decode_envelope",
    "decode_reply",
    "encode_envelope",
    "paired_t",
    "performance_scores",
    "plan",
    "render_command",
    "run_scenario",
    "torque",
    "welch_t",
]
