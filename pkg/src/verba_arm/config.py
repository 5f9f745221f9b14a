"""Configuration loading: one YAML document, flag overrides, env secrets.

Everything has a sane default; a config file narrows it; command-line flags
override the file; the live-backend API key comes exclusively from the
``VERBA_ARM_API_KEY`` environment variable and never appears in any file or
log.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .backends import (
    API_KEY_ENV,
    BackendError,
    EchoBackend,
    LiveBackend,
    LlmBackend,
    ScriptedBackend,
)
from .controller import Box, ImpedanceGains

__all__ = ["BackendConfig", "Config", "ConfigError", "load_config"]

MAX_DT = 0.01


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "echo"  # scripted | live | echo
    path: str | None = None  # scripted fixture
    endpoint: str | None = None
    model: str | None = None
    timeout_s: float = 30.0

    def validate(self) -> None:
        if self.kind not in ("scripted", "live", "echo"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.kind == "scripted" and not self.path:
            raise ConfigError("scripted backend needs a fixture path")
        if self.kind == "live" and not (self.endpoint and self.model):
            raise ConfigError("live backend needs endpoint and model")

    def build(self) -> LlmBackend:
        self.validate()
        if self.kind == "scripted":
            assert self.path is not None
            if not Path(self.path).exists():
                raise ConfigError(f"scripted fixture not found: {self.path}")
            return ScriptedBackend.from_file(self.path)
        if self.kind == "live":
            if not os.environ.get(API_KEY_ENV):
                raise ConfigError(
                    f"live backend requires the {API_KEY_ENV} environment variable"
                )
            try:
                return LiveBackend(
                    endpoint=self.endpoint or "",
                    model=self.model or "",
                    timeout_s=self.timeout_s,
                )
            except BackendError as exc:
                raise ConfigError(str(exc)) from exc
        return EchoBackend()


@dataclass(frozen=True)
class Config:
    backend: BackendConfig = field(default_factory=BackendConfig)
    scene: str = "scenes/assembly.json"
    dt: float = 1e-3
    omega1: float = 8.0
    k_position: float = 400.0
    k_orientation: float = 100.0
    k_gripper: float = 400.0
    m_diag: float = 1.0
    bounds_min: tuple[float, float, float] = (-1.5, -1.5, -1.5)
    bounds_max: tuple[float, float, float] = (1.5, 1.5, 1.5)
    velocity_limit: float = 100.0
    port: int = 8765
    static_dir: str | None = "frontend/dist"
    log_dir: str = "logs"
    state_publish_hz: float = 50.0
    condition: str = "assistant"

    def validate(self) -> None:
        if not (0.0 < self.dt <= MAX_DT):
            raise ConfigError(f"dt must be in (0, {MAX_DT}], got {self.dt}")
        if not (1024 <= self.port <= 65535):
            raise ConfigError(f"port must be in [1024, 65535], got {self.port}")
        if self.omega1 <= 0:
            raise ConfigError("omega1 must be positive")
        if self.state_publish_hz <= 0:
            raise ConfigError("state_publish_hz must be positive")
        self.backend.validate()

    def gains(self) -> ImpedanceGains:
        try:
            return ImpedanceGains.default(
                k_position=self.k_position,
                k_orientation=self.k_orientation,
                k_gripper=self.k_gripper,
                m_diag=self.m_diag,
            )
        except ValueError as exc:
            raise ConfigError(f"bad gains: {exc}") from exc

    def workspace(self) -> Box:
        try:
            return Box(lo=self.bounds_min, hi=self.bounds_max)
        except ValueError as exc:
            raise ConfigError(f"bad bounds: {exc}") from exc

    def describe(self) -> str:
        backend = self.backend.kind
        if self.backend.kind == "scripted":
            backend += f" ({self.backend.path})"
        elif self.backend.kind == "live":
            backend += f" ({self.backend.model} @ {self.backend.endpoint})"
        lines = [
            f"backend:     {backend}",
            f"scene:       {self.scene}",
            f"dt:          {self.dt}",
            f"omega1:      {self.omega1}",
            f"stiffness:   position={self.k_position} orientation={self.k_orientation} "
            f"gripper={self.k_gripper}",
            f"bounds:      {list(self.bounds_min)} .. {list(self.bounds_max)}",
            f"port:        {self.port}",
            f"log dir:     {self.log_dir}",
            f"publish hz:  {self.state_publish_hz}",
            f"condition:   {self.condition}",
        ]
        return "\n".join(lines)


def _backend_from_doc(doc: dict) -> BackendConfig:
    kind = doc.get("type")
    if kind is None:
        raise ConfigError("backend section needs a 'type'")
    return BackendConfig(
        kind=str(kind),
        path=doc.get("path"),
        endpoint=doc.get("endpoint"),
        model=doc.get("model"),
        timeout_s=float(doc.get("timeout_s", 30.0)),
    )


def load_config(
    path: str | Path | None = None,
    backend: str | None = None,
    scene: str | None = None,
    port: int | None = None,
    log_dir: str | None = None,
) -> Config:
    """Load the config file (if any) and apply flag overrides."""
    config = Config()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = yaml.safe_load(fh) or {}
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must be a mapping")
        known = {
            "backend", "scene", "dt", "omega1", "gains", "bounds",
            "velocity_limit", "port", "static_dir", "log_dir",
            "state_publish_hz", "condition",
        }
        unknown = doc.keys() - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        updates: dict = {}
        if "backend" in doc:
            if not isinstance(doc["backend"], dict):
                raise ConfigError("backend must be a mapping")
            updates["backend"] = _backend_from_doc(doc["backend"])
        for key in ("scene", "log_dir", "condition", "static_dir"):
            if key in doc:
                updates[key] = doc[key]
        for key in ("dt", "omega1", "velocity_limit", "state_publish_hz"):
            if key in doc:
                updates[key] = float(doc[key])
        if "port" in doc:
            updates["port"] = int(doc["port"])
        if "gains" in doc:
            gains_doc = doc["gains"]
            if not isinstance(gains_doc, dict):
                raise ConfigError("gains must be a mapping")
            for src, dst in (
                ("position", "k_position"),
                ("orientation", "k_orientation"),
                ("gripper", "k_gripper"),
                ("inertia", "m_diag"),
            ):
                if src in gains_doc:
                    updates[dst] = float(gains_doc[src])
        if "bounds" in doc:
            bounds_doc = doc["bounds"]
            try:
                updates["bounds_min"] = tuple(float(v) for v in bounds_doc["min"])
                updates["bounds_max"] = tuple(float(v) for v in bounds_doc["max"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad bounds section: {exc}") from exc
        config = replace(config, **updates)

    if backend is not None:
        if backend not in ("scripted", "live", "echo"):
            raise ConfigError(f"unknown backend {backend!r}")
        if backend == config.backend.kind:
            pass  # keep file-provided details
        else:
            config = replace(config, backend=replace(config.backend, kind=backend))
    if scene is not None:
        config = replace(config, scene=scene)
    if port is not None:
        config = replace(config, port=port)
    if log_dir is not None:
        config = replace(config, log_dir=log_dir)
    return config
