"""Expansion of decoded command sequences into primitive arm motions.

`plan` turns a grab/move/drop sequence into an ordered queue of primitives,
validating object and waypoint references and gripper-state preconditions up
front.  `Executor.tick` then drives the queue strictly in order: one
primitive owns the controller target at a time, and the next primitive is
dispatched only after the previous one reports complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .commands import (
    CartesianTarget,
    Command,
    Drop,
    Grab,
    Move,
    NamedTarget,
    render_command,
)
from .controller import APERTURE_MAX, ArmController, Diverged, OutOfWorkspace
from .scene import Scene, SceneError

__all__ = [
    "Attach",
    "CloseGripper",
    "Detach",
    "Done",
    "ExecStatus",
    "ExecutionError",
    "ExecutionPlan",
    "Executor",
    "ExecutorSettings",
    "Failed",
    "MoveTo",
    "OpenGripper",
    "PrimitiveAction",
    "Running",
    "plan",
]

GRIPPER_AXIS = 6


class ExecutionError(SceneError):
    """Raised at plan time for sequences that can never execute safely."""


@dataclass(frozen=True)
class MoveTo:
    """Drive the tool to a position; optionally command the aperture too."""

    position: tuple[float, float, float]
    aperture: float | None = None
    label: str = "move"


@dataclass(frozen=True)
class CloseGripper:
    label: str = "close gripper"


@dataclass(frozen=True)
class OpenGripper:
    label: str = "open gripper"


@dataclass(frozen=True)
class Attach:
    name: str
    label: str = "attach"


@dataclass(frozen=True)
class Detach:
    label: str = "detach"


PrimitiveAction = Union[MoveTo, CloseGripper, OpenGripper, Attach, Detach]


@dataclass(frozen=True)
class ExecutionPlan:
    """Ordered primitive queue plus the command it came from.

    ``spans[i]`` is the half-open primitive index range expanded from
    ``source[i]``, used to report which command is currently running.
    """

    actions: tuple[PrimitiveAction, ...]
    source: tuple[Command, ...]
    spans: tuple[tuple[int, int], ...]

    def command_index(self, cursor: int) -> int | None:
        for i, (lo, hi) in enumerate(self.spans):
            if lo <= cursor < hi:
                return i
        return None


@dataclass(frozen=True)
class Running:
    cursor: int


@dataclass(frozen=True)
class Done:
    pass


@dataclass(frozen=True)
class Failed:
    error: str
    cursor: int


ExecStatus = Union[Running, Done, Failed]


def plan(
    seq: Sequence[Command],
    scene: Scene,
    extra_waypoints: dict[str, tuple[float, float, float]] | None = None,
    clearance: float = 0.15,
) -> ExecutionPlan:
    """Expand a command sequence into primitives, or fail before moving at all.

    Tracks the would-be gripper state through the sequence so that a Drop of
    an object that is not held, or a Grab while holding, is rejected here
    rather than mid-motion.  Object poses are likewise tracked virtually so a
    Grab later in the same sequence targets the pose the object will have by
    then.
    """
    if not seq:
        raise ExecutionError("empty command sequence")

    actions: list[PrimitiveAction] = []
    spans: list[tuple[int, int]] = []

    current = scene.held_object()
    holding: str | None = current.name if current else None
    poses = {name: obj.pose.copy() for name, obj in scene.objects.items()}
    cursor_pos: np.ndarray | None = None  # planned gripper position, once known

    def waypoint(name: str) -> np.ndarray:
        if extra_waypoints and name in extra_waypoints:
            return np.asarray(extra_waypoints[name], dtype=float)
        return scene.resolve_waypoint(name)

    for cmd in seq:
        start = len(actions)
        if isinstance(cmd, Grab):
            if holding is not None:
                raise ExecutionError(
                    f"cannot grab {cmd.name!r} while holding {holding!r}"
                )
            scene.resolve_object(cmd.name)  # UnknownObject surfaces here
            pose = poses[cmd.name]
            above = pose + np.array([0.0, 0.0, clearance])
            if not scene.bounds.contains(above):
                raise OutOfWorkspace(
                    f"approach point {above.tolist()} above {cmd.name!r} out of bounds"
                )
            actions.append(MoveTo(_t3(above), None, f"approach {cmd.name}"))
            actions.append(MoveTo(_t3(pose), APERTURE_MAX, f"reach {cmd.name}"))
            actions.append(CloseGripper())
            actions.append(Attach(cmd.name))
            actions.append(MoveTo(_t3(above), None, f"lift {cmd.name}"))
            holding = cmd.name
            cursor_pos = above.copy()
        elif isinstance(cmd, Move):
            if isinstance(cmd.target, NamedTarget):
                point = waypoint(cmd.target.waypoint)
                label = f"move to waypoint {cmd.target.waypoint}"
            else:
                point = np.asarray(cmd.target.as_tuple(), dtype=float)
                label = f"move to [{cmd.target.x},{cmd.target.y},{cmd.target.z}]"
            if not scene.bounds.contains(point):
                raise OutOfWorkspace(f"move target {point.tolist()} out of bounds")
            actions.append(MoveTo(_t3(point), None, label))
            cursor_pos = point.copy()
            if holding is not None:
                poses[holding] = point.copy()
        elif isinstance(cmd, Drop):
            scene.resolve_object(cmd.name)
            if holding is None:
                raise ExecutionError(f"cannot drop {cmd.name!r}: nothing is held")
            if holding != cmd.name:
                raise ExecutionError(
                    f"cannot drop {cmd.name!r}: holding {holding!r}"
                )
            actions.append(OpenGripper())
            actions.append(Detach())
            if cursor_pos is not None:
                poses[holding] = cursor_pos.copy()
            holding = None
        else:
            raise TypeError(f"not a command: {cmd!r}")
        spans.append((start, len(actions)))

    return ExecutionPlan(tuple(actions), tuple(seq), tuple(spans))


def _t3(a: np.ndarray) -> tuple[float, float, float]:
    return (float(a[0]), float(a[1]), float(a[2]))


@dataclass
class ExecutorSettings:
    settle_eps: float = 1e-2
    settle_hold: float = 0.2
    attach_radius: float = 0.02
    action_timeout: float = 10.0
    open_aperture: float = APERTURE_MAX
    closed_aperture: float = 0.0


class Executor:
    """Steps one execution plan against the controller and scene."""

    def __init__(
        self,
        exec_plan: ExecutionPlan,
        controller: ArmController,
        scene: Scene,
        settings: ExecutorSettings | None = None,
    ):
        self.plan = exec_plan
        self.controller = controller
        self.scene = scene
        self.settings = settings or ExecutorSettings()
        self.cursor = 0
        self._dispatched = False
        self._elapsed = 0.0
        self._status: ExecStatus = (
            Done() if not exec_plan.actions else Running(0)
        )

    @property
    def status(self) -> ExecStatus:
        return self._status

    def current_action(self) -> PrimitiveAction | None:
        if self.cursor < len(self.plan.actions):
            return self.plan.actions[self.cursor]
        return None

    def tick(self, dt: float) -> ExecStatus:
        """Advance the plan by one controller step of ``dt`` seconds.

        Attach/Detach are instantaneous and consume no simulated time; timed
        primitives own the controller target until settled.  Terminal
        statuses are absorbing.
        """
        if not isinstance(self._status, Running):
            return self._status

        # Instantaneous primitives run back to back without consuming time.
        while self.cursor < len(self.plan.actions):
            action = self.plan.actions[self.cursor]
            if isinstance(action, Attach):
                if not self._attach(action):
                    return self._status
                continue
            if isinstance(action, Detach):
                held = self.scene.held_object()
                if held is not None:
                    held.held = False
                self._advance()
                continue
            break

        if self.cursor >= len(self.plan.actions):
            self._status = Done()
            return self._status

        action = self.plan.actions[self.cursor]
        if not self._dispatched:
            self._dispatch(action)

        try:
            self.controller.step(dt)
        except Diverged as exc:
            self._status = Failed(str(exc), self.cursor)
            return self._status
        self._sync_held_pose()
        self._elapsed += dt

        if self._completed(action):
            self._advance()
            if self.cursor >= len(self.plan.actions):
                self._status = Done()
                return self._status
        elif self._elapsed > self.settings.action_timeout:
            self._status = Failed(
                f"action timeout after {self.settings.action_timeout}s "
                f"on {action.label!r}",
                self.cursor,
            )
            return self._status

        self._status = Running(self.cursor)
        return self._status

    # -- internals ---------------------------------------------------------

    def _dispatch(self, action: PrimitiveAction) -> None:
        target = self.controller.x_tilde.copy()
        if isinstance(action, MoveTo):
            target[0:3] = action.position
            if action.aperture is not None:
                target[GRIPPER_AXIS] = action.aperture
        elif isinstance(action, CloseGripper):
            target[GRIPPER_AXIS] = self.settings.closed_aperture
        elif isinstance(action, OpenGripper):
            target[GRIPPER_AXIS] = self.settings.open_aperture
        self.controller.set_target(target)
        self._dispatched = True
        self._elapsed = 0.0

    def _completed(self, action: PrimitiveAction) -> bool:
        eps, hold = self.settings.settle_eps, self.settings.settle_hold
        if isinstance(action, MoveTo):
            axes: tuple[int, ...] = (0, 1, 2)
            if action.aperture is not None:
                axes = (0, 1, 2, GRIPPER_AXIS)
            return self.controller.settled(eps, hold, axes=axes)
        return self.controller.settled(eps, hold, axes=(GRIPPER_AXIS,))

    def _attach(self, action: Attach) -> bool:
        obj = self.scene.objects.get(action.name)
        if obj is None:
            self._status = Failed(f"unknown object {action.name!r}", self.cursor)
            return False
        gripper = self.controller.x[0:3]
        distance = float(np.linalg.norm(gripper - obj.pose))
        if distance > self.settings.attach_radius:
            self._status = Failed(
                f"attach out of range: {distance * 100:.1f} cm from "
                f"{action.name!r} (radius {self.settings.attach_radius * 100:.0f} cm)",
                self.cursor,
            )
            return False
        if self.scene.held_object() is not None:
            self._status = Failed("already holding an object", self.cursor)
            return False
        obj.held = True
        obj.pose = self.controller.x[0:3].copy()
        self._advance()
        return True

    def _sync_held_pose(self) -> None:
        held = self.scene.held_object()
        if held is not None:
            held.pose = self.controller.x[0:3].copy()

    def _advance(self) -> None:
        self.cursor += 1
        self._dispatched = False
        self._elapsed = 0.0

    def describe_cursor(self) -> dict:
        """Status payload fragment naming the current command and primitive."""
        action = self.current_action()
        cmd_index = self.plan.command_index(min(self.cursor, len(self.plan.actions) - 1))
        payload: dict = {"cursor": self.cursor, "total": len(self.plan.actions)}
        if action is not None:
            payload["primitive"] = action.label
        if cmd_index is not None:
            payload["command"] = render_command(self.plan.source[cmd_index])
            payload["command_index"] = cmd_index
        return payload
