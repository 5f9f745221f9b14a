"""Workspace ground truth: objects, named waypoints, bounds.

The scene registry stands in for a vision system; command tokens resolve
against it by exact case-insensitive name lookup.  Scenes load from a JSON
document listing objects ``{name, x, y, z}``, waypoints ``{name, x, y, z}``
(must include ``back`` and ``operator``) and axis-aligned ``bounds``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .commands import object_id
from .controller import Box

__all__ = ["Scene", "SceneError", "SceneObject", "UnknownObject", "UnknownWaypoint"]

REQUIRED_WAYPOINTS = ("back", "operator")


class SceneError(Exception):
    """Base class for scene lookup and validation failures."""


class UnknownObject(SceneError):
    def __init__(self, name: str):
        super().__init__(f"no object named {name!r} in the scene")
        self.name = name


class UnknownWaypoint(SceneError):
    def __init__(self, name: str):
        super().__init__(f"no waypoint named {name!r} in the scene")
        self.name = name


@dataclass(eq=False)
class SceneObject:
    name: str
    pose: np.ndarray
    held: bool = False

    def __post_init__(self) -> None:
        self.name = object_id(self.name)
        self.pose = np.asarray(self.pose, dtype=float).reshape(3).copy()


@dataclass(eq=False)
class Scene:
    """Mutable object registry owned by the simulation loop."""

    objects: dict[str, SceneObject] = field(default_factory=dict)
    waypoints: dict[str, np.ndarray] = field(default_factory=dict)
    bounds: Box = field(default_factory=Box)
    home: tuple[float, float, float] = (0.0, 0.0, 0.5)

    def __post_init__(self) -> None:
        self.waypoints = {
            object_id(k): np.asarray(v, dtype=float).reshape(3)
            for k, v in self.waypoints.items()
        }
        for required in REQUIRED_WAYPOINTS:
            if required not in self.waypoints:
                raise SceneError(f"scene must define waypoint {required!r}")
        for name, point in self.waypoints.items():
            if not self.bounds.contains(point):
                raise SceneError(f"waypoint {name!r} at {point.tolist()} outside bounds")
        for obj in self.objects.values():
            if not self.bounds.contains(obj.pose):
                raise SceneError(
                    f"object {obj.name!r} at {obj.pose.tolist()} outside bounds"
                )

    @classmethod
    def from_objects(
        cls,
        objects: Mapping[str, tuple[float, float, float]] | list[SceneObject],
        waypoints: Mapping[str, tuple[float, float, float]],
        bounds: Box | None = None,
    ) -> "Scene":
        if isinstance(objects, Mapping):
            registry = {
                object_id(name): SceneObject(name, np.asarray(pose, dtype=float))
                for name, pose in objects.items()
            }
        else:
            registry = {obj.name: obj for obj in objects}
            if len(registry) != len(objects):
                raise SceneError("object names must be unique")
        return cls(objects=registry, waypoints=dict(waypoints), bounds=bounds or Box())

    @classmethod
    def from_file(cls, path: str | Path) -> "Scene":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            bounds_doc = doc.get("bounds")
            bounds = (
                Box(lo=tuple(bounds_doc["min"]), hi=tuple(bounds_doc["max"]))
                if bounds_doc
                else Box()
            )
            objects = {o["name"]: (o["x"], o["y"], o["z"]) for o in doc["objects"]}
            waypoints = {w["name"]: (w["x"], w["y"], w["z"]) for w in doc["waypoints"]}
        except (KeyError, TypeError) as exc:
            raise SceneError(f"bad scene document {path}: {exc}") from exc
        scene = cls.from_objects(objects, waypoints, bounds)
        if "home" in doc:
            scene.home = tuple(float(c) for c in doc["home"])
        return scene

    # -- lookups ----------------------------------------------------------

    def resolve_object(self, name: str) -> SceneObject:
        """Case-insensitive exact-name lookup; UnknownObject when absent."""
        try:
            key = object_id(name)
        except Exception:
            raise UnknownObject(name) from None
        obj = self.objects.get(key)
        if obj is None:
            raise UnknownObject(name)
        return obj

    def resolve_waypoint(self, name: str) -> np.ndarray:
        try:
            key = object_id(name)
        except Exception:
            raise UnknownWaypoint(name) from None
        point = self.waypoints.get(key)
        if point is None:
            raise UnknownWaypoint(name)
        return point.copy()

    def held_object(self) -> SceneObject | None:
        held = [o for o in self.objects.values() if o.held]
        if len(held) > 1:
            raise SceneError(f"multiple held objects: {[o.name for o in held]}")
        return held[0] if held else None

    def to_payload(self) -> dict:
        """JSON-ready snapshot for the scene/objects topic (sorted, stable)."""
        return {
            "objects": [
                {
                    "name": obj.name,
                    "x": float(obj.pose[0]),
                    "y": float(obj.pose[1]),
                    "z": float(obj.pose[2]),
                    "held": bool(obj.held),
                }
                for obj in sorted(self.objects.values(), key=lambda o: o.name)
            ]
        }
