"""One operator session: dialogue + planner + controller + bus + log.

The session owns the simulated clock.  Dialogue turns are instantaneous in
simulated time; execution advances the clock by ``dt`` per controller step.
Controller and scene snapshots are published at a fixed decimated rate
(default 50 Hz) plus once at every execution boundary, and every envelope is
appended to the session log as its canonical wire line, which is what makes
scripted sessions byte-for-byte reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from .backends import BackendError, LlmBackend
from .bus import Bus, Envelope, encode_envelope
from .commands import render_command
from .controller import APERTURE_MAX, ArmController, ImpedanceGains, OutOfWorkspace
from .dialogue import (
    DialogueSession,
    Execute,
    Relay,
    SessionMemory,
    build_system_prompt,
)
from .executor import (
    Done,
    ExecutionError,
    Executor,
    ExecutorSettings,
    Failed,
    Running,
    plan,
)
from .scene import Scene, SceneError

__all__ = ["Session", "SessionSettings", "TurnOutcome"]

_EVENT = "session/event"


@dataclass
class SessionSettings:
    dt: float = 1e-3
    state_publish_hz: float = 50.0
    max_exec_seconds: float = 120.0  # simulated-time guard per reply
    pacing: float = 0.0  # 0 = fast; 1 = wall-clock real time
    condition: str = "assistant"
    pair: str | None = None
    window_turns: int = 20


@dataclass(frozen=True)
class TurnOutcome:
    """What a single operator utterance led to."""

    reply_text: str
    kind: str  # "conversation" | "commands" | "error"
    relay: str | None
    exec_status: str | None  # "done" | "failed" | None
    commands: tuple[str, ...] = ()


class Session:
    """Single-threaded session loop; one per operator connection."""

    def __init__(
        self,
        session_id: str,
        scene: Scene,
        backend: LlmBackend,
        gains: ImpedanceGains | None = None,
        omega1: float = 8.0,
        settings: SessionSettings | None = None,
        exec_settings: ExecutorSettings | None = None,
        log_path: str | Path | None = None,
        system_prompt: str | None = None,
    ):
        self.session_id = session_id
        self.scene = scene
        self.backend = backend
        self.settings = settings or SessionSettings()
        self.exec_settings = exec_settings or ExecutorSettings()
        self.sim_t = 0.0
        self.bus = Bus(clock=lambda: self.sim_t)
        self.controller = ArmController(
            start=tuple(scene.home) + (0.0, 0.0, 0.0, APERTURE_MAX),
            gains=gains or ImpedanceGains.default(),
            omega1=omega1,
            bounds=scene.bounds,
        )
        waypoints = {
            name: (float(p[0]), float(p[1]), float(p[2]))
            for name, p in scene.waypoints.items()
        }
        if system_prompt is None:
            system_prompt = build_system_prompt(
                sorted(scene.objects.keys()), waypoints
            )
        self.dialogue = DialogueSession(
            system_prompt=system_prompt,
            memory=SessionMemory(named_waypoints=waypoints),
            window_turns=self.settings.window_turns,
        )
        self._log: IO[str] | None = None
        if log_path is not None:
            path = Path(log_path)
            path.parent.mkdir(parents=True, exist_ok=True)
            self._log = open(path, "w", encoding="utf-8")
            self.bus.add_tap(self._write_log_line)
        self._turn = 0
        self._publish_accum = 0.0
        self._started = False
        self._ended = False

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        payload = {
            "event": "start",
            "session_id": self.session_id,
            "condition": self.settings.condition,
        }
        if self.settings.pair is not None:
            payload["pair"] = self.settings.pair
        self.bus.publish(_EVENT, payload)
        self.bus.publish("scene/objects", self.scene.to_payload())
        self.bus.publish("robot/state", self.controller.snapshot())

    def mark_task_complete(self) -> None:
        self.bus.publish(_EVENT, {"event": "task_complete"})

    def end(self) -> None:
        if self._ended or not self._started:
            return
        self._ended = True
        self.bus.publish(_EVENT, {"event": "end"})
        if self._log is not None:
            self._log.flush()
            self._log.close()
            self._log = None

    def _write_log_line(self, envelope: Envelope) -> None:
        assert self._log is not None
        self._log.write(encode_envelope(envelope) + "\n")

    # -- the turn loop -----------------------------------------------------

    def handle_utterance(self, text: str) -> TurnOutcome:
        """Submit one operator line and run it to quiescence.

        Raises DialogueError subclasses for protocol misuse (empty text,
        wrong phase) and BackendError when the reply generator fails; decode
        and execution failures are absorbed into relay turns instead.
        """
        if not self._started:
            self.start()
        request = self.dialogue.submit_utterance(text)
        self._turn += 1
        self.bus.publish("user/utterance", {"text": text, "turn": self._turn})
        try:
            reply = self.backend.generate(request.messages)
        except BackendError:
            # Put the turn back so the operator can retry after a backend
            # hiccup without wedging the phase machine.
            self.dialogue.retract_utterance()
            raise
        effect = self.dialogue.ingest_reply(reply)

        if isinstance(effect, Relay):
            self.bus.publish(
                "assistant/reply",
                {
                    "text": reply,
                    "kind": effect.kind,
                    "relay": effect.text,
                    "turn": self._turn,
                },
            )
            return TurnOutcome(reply, effect.kind, effect.text, None)

        assert isinstance(effect, Execute)
        rendered = tuple(render_command(c) for c in effect.sequence)
        self.bus.publish(
            "assistant/reply",
            {
                "text": reply,
                "kind": "commands",
                "commands": list(rendered),
                "turn": self._turn,
            },
        )
        status = self._execute(effect)
        self.dialogue.complete_execution()
        kind = "done" if isinstance(status, Done) else "failed"
        relay = None
        if isinstance(status, Failed):
            relay = f"Execution stopped: {status.error}"
        return TurnOutcome(reply, "commands", relay, kind, rendered)

    def _execute(self, effect: Execute):
        try:
            exec_plan = plan(
                effect.sequence,
                self.scene,
                extra_waypoints=self.dialogue.memory.named_waypoints,
            )
        except (SceneError, ExecutionError, OutOfWorkspace) as exc:
            status = Failed(str(exc), 0)
            self.bus.publish(
                "exec/status",
                {"state": "failed", "error": str(exc), "cursor": 0},
            )
            return status

        executor = Executor(exec_plan, self.controller, self.scene, self.exec_settings)
        self.bus.publish(
            "exec/status",
            {"state": "running", **executor.describe_cursor()},
        )
        last_cursor = executor.cursor
        last_command_index = self._announce_command(executor, None)

        dt = self.settings.dt
        deadline = self.sim_t + self.settings.max_exec_seconds
        publish_period = 1.0 / self.settings.state_publish_hz

        while True:
            status = executor.tick(dt)
            self.sim_t += dt
            self._publish_accum += dt
            if self._publish_accum + 1e-12 >= publish_period:
                self._publish_accum -= publish_period
                self.bus.publish("robot/state", self.controller.snapshot())
                self.bus.publish("scene/objects", self.scene.to_payload())
            if self.settings.pacing > 0:
                time.sleep(dt * self.settings.pacing)

            if isinstance(status, Running) and status.cursor != last_cursor:
                last_cursor = status.cursor
                self.bus.publish(
                    "exec/status",
                    {"state": "running", **executor.describe_cursor()},
                )
                last_command_index = self._announce_command(
                    executor, last_command_index
                )
            if isinstance(status, (Done, Failed)):
                break
            if self.sim_t > deadline:
                status = Failed("execution exceeded the session time guard", executor.cursor)
                break

        self.bus.publish("robot/state", self.controller.snapshot())
        self.bus.publish("scene/objects", self.scene.to_payload())
        if isinstance(status, Done):
            self.bus.publish("exec/status", {"state": "done"})
        else:
            self.bus.publish(
                "exec/status",
                {"state": "failed", "error": status.error, "cursor": status.cursor},
            )
        return status

    def _announce_command(
        self, executor: Executor, last_index: int | None
    ) -> int | None:
        """Publish robot/command when the cursor enters a new source command."""
        if executor.cursor >= len(executor.plan.actions):
            return last_index
        index = executor.plan.command_index(executor.cursor)
        if index is not None and index != last_index:
            cmd = executor.plan.source[index]
            self.bus.publish(
                "robot/command",
                {
                    "text": render_command(cmd),
                    "index": index,
                    "count": len(executor.plan.source),
                    "turn": self._turn,
                },
            )
            return index
        return last_index
