"""Scripted end-to-end scenario runner.

A scenario YAML names a scene, the operator utterances in order, the
scripted assistant replies that answer them, and end-state assertions on
object poses.  Running one drives the full stack (dialogue, decode, plan,
simulate, bus, log) with zero network access and a deterministic result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .backends import ScriptedBackend, load_reply_fixture
from .config import Config
from .scene import Scene
from .session import Session, SessionSettings

__all__ = [
    "Assertion",
    "Scenario",
    "ScenarioError",
    "ScenarioResult",
    "ScenarioTimeout",
    "run_scenario",
]

WALL_CAP_S = 60.0


class ScenarioError(Exception):
    pass


class ScenarioTimeout(ScenarioError):
    pass


@dataclass(frozen=True)
class Assertion:
    object_name: str
    pose: tuple[float, float, float]
    tolerance: float


@dataclass
class Scenario:
    name: str
    scene_path: str
    utterances: list[str]
    replies: list[str]
    assertions: list[Assertion] = field(default_factory=list)
    condition: str = "assistant"
    pair: str | None = None
    session_id: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "Scenario":
        base = Path(path).parent
        try:
            with open(path, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
        except FileNotFoundError as exc:
            raise ScenarioError(f"scenario file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ScenarioError(f"bad scenario file {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ScenarioError(f"scenario {path} must be a mapping")
        try:
            name = str(doc.get("name") or Path(path).stem)
            scene_path = str(doc["scene"])
            utterances = [str(u) for u in doc["utterances"]]
        except KeyError as exc:
            raise ScenarioError(f"scenario {path} missing key: {exc}") from exc
        if "replies" in doc:
            replies = [str(r) for r in doc["replies"]]
        elif "replies_file" in doc:
            replies = load_reply_fixture(_resolve(base, str(doc["replies_file"])))
        else:
            raise ScenarioError(f"scenario {path} needs replies or replies_file")
        if len(replies) < len(utterances):
            raise ScenarioError(
                f"scenario {path}: {len(utterances)} utterances but only "
                f"{len(replies)} replies"
            )
        assertions = []
        for entry in doc.get("assertions", []):
            try:
                assertions.append(
                    Assertion(
                        object_name=str(entry["object"]),
                        pose=tuple(float(v) for v in entry["pose"]),
                        tolerance=float(entry["tolerance"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"scenario {path}: bad assertion {entry!r}: {exc}") from exc
        return cls(
            name=name,
            scene_path=_resolve(base, scene_path),
            utterances=utterances,
            replies=replies,
            assertions=assertions,
            condition=str(doc.get("condition", "assistant")),
            pair=str(doc["pair"]) if "pair" in doc else None,
            session_id=str(doc["session_id"]) if "session_id" in doc else None,
        )


def _resolve(base: Path, path: str) -> str:
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return str(candidate)
    return str(base / candidate)


@dataclass
class AssertionResult:
    assertion: Assertion
    actual: tuple[float, float, float]
    distance: float
    passed: bool


@dataclass
class ScenarioResult:
    name: str
    session_id: str
    log_path: Path
    simulated_s: float
    wall_s: float
    turns: list[str]  # one status line per utterance
    assertion_results: list[AssertionResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.assertion_results)

    def to_text(self) -> str:
        lines = [f"scenario {self.name}: session {self.session_id}"]
        lines.extend(f"  {line}" for line in self.turns)
        lines.append(
            f"  simulated {self.simulated_s:.3f}s in {self.wall_s:.2f}s wall"
        )
        for r in self.assertion_results:
            mark = "PASS" if r.passed else "FAIL"
            lines.append(
                f"  [{mark}] {r.assertion.object_name} within "
                f"{r.assertion.tolerance} m of {list(r.assertion.pose)}: "
                f"distance {r.distance:.4f} m"
            )
        lines.append(f"  result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def run_scenario(
    scenario: Scenario,
    config: Config | None = None,
    log_dir: str | Path | None = None,
    wall_cap_s: float = WALL_CAP_S,
) -> ScenarioResult:
    """Feed every utterance through a scripted session and check end state."""
    config = config or Config()
    scene = Scene.from_file(scenario.scene_path)
    backend = ScriptedBackend(scenario.replies)
    session_id = scenario.session_id or scenario.name
    log_root = Path(log_dir if log_dir is not None else config.log_dir)
    log_path = log_root / f"{session_id}.jsonl"

    session = Session(
        session_id=session_id,
        scene=scene,
        backend=backend,
        gains=config.gains(),
        omega1=config.omega1,
        settings=SessionSettings(
            dt=config.dt,
            state_publish_hz=config.state_publish_hz,
            condition=scenario.condition,
            pair=scenario.pair,
        ),
        log_path=log_path,
    )

    started = time.monotonic()
    turns: list[str] = []
    session.start()
    try:
        for utterance in scenario.utterances:
            if time.monotonic() - started > wall_cap_s:
                raise ScenarioTimeout(
                    f"scenario exceeded the {wall_cap_s:.0f}s wall cap"
                )
            outcome = session.handle_utterance(utterance)
            if outcome.kind == "commands":
                detail = f"executed {len(outcome.commands)} command(s): " + " ".join(
                    outcome.commands
                )
                if outcome.exec_status != "done":
                    detail += f" -> {outcome.relay}"
            else:
                detail = f"assistant: {outcome.relay}"
            turns.append(f"> {utterance}\n  {detail}")
        session.mark_task_complete()
    finally:
        session.end()

    results = []
    for assertion in scenario.assertions:
        obj = scene.resolve_object(assertion.object_name)
        actual = (float(obj.pose[0]), float(obj.pose[1]), float(obj.pose[2]))
        distance = sum((a - b) ** 2 for a, b in zip(actual, assertion.pose)) ** 0.5
        results.append(
            AssertionResult(
                assertion=assertion,
                actual=actual,
                distance=distance,
                passed=distance <= assertion.tolerance,
            )
        )

    return ScenarioResult(
        name=scenario.name,
        session_id=session_id,
        log_path=log_path,
        simulated_s=session.sim_t,
        wall_s=time.monotonic() - started,
        turns=turns,
        assertion_results=results,
    )
