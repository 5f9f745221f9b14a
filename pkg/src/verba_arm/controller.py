"""Dual-stage impedance controller for the simulated 7-axis arm.

The configuration vector is ``[px, py, pz, rx, ry, rz, g]``: tool position in
meters, extrinsic Euler orientation in radians, and gripper aperture in
meters (clamped to [0, 0.08]).

Motion from a discrete target ``x_tilde`` happens in two stages.  Stage one
is a critically damped second-order tracker with natural frequency
``omega1`` that turns the discrete target into a continuously moving interim
target ``x_tilde_t``; its per-step displacement is capped at
``omega1 * |x_tilde - x_tilde_t| + eps`` times ``dt``, which is what makes
the interim target provably smooth.  Stage two integrates the impedance law

    M * a = -D * v - K * (x - x_tilde_t)

with one semi-implicit (symplectic) Euler step per tick: velocity first,
then position from the new velocity.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "APERTURE_MAX",
    "ArmController",
    "Box",
    "ControllerError",
    "Diverged",
    "ImpedanceGains",
    "OutOfWorkspace",
    "as_config",
    "torque",
]

DOF = 7
APERTURE_MAX = 0.08
ORIENTATION_LIMIT = math.pi / 2
DEFAULT_OMEGA1 = 8.0
DEFAULT_DT = 1e-3
MAX_DT = 0.01
VELOCITY_LIMIT = 100.0

_POSITION = slice(0, 3)
_ORIENTATION = slice(3, 6)
_APERTURE = 6


class ControllerError(Exception):
    """Base class for controller failures."""


class OutOfWorkspace(ControllerError):
    """A commanded target lies outside the workspace box or joint limits."""


class Diverged(ControllerError):
    """Velocity exceeded the divergence sentinel; gains are unstable."""


def as_config(values: Iterable[float]) -> np.ndarray:
    """Validate and normalize a 7-vector configuration.

    All components must be finite; the aperture component is clamped into
    [0, APERTURE_MAX].
    """
    x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                   dtype=float).reshape(-1)
    if x.shape != (DOF,):
        raise ValueError(f"configuration must have {DOF} components, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("configuration components must be finite")
    x = x.copy()
    x[_APERTURE] = min(max(x[_APERTURE], 0.0), APERTURE_MAX)
    return x


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace bounds for the position block."""

    lo: tuple[float, float, float] = (-1.5, -1.5, -1.5)
    hi: tuple[float, float, float] = (1.5, 1.5, 1.5)

    def __post_init__(self) -> None:
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"degenerate bounds {self.lo} .. {self.hi}")

    def contains(self, point: Sequence[float]) -> bool:
        return all(l <= p <= h for l, p, h in zip(self.lo, point, self.hi))


def _check_spd(name: str, m: np.ndarray, *, strict: bool) -> None:
    if m.shape != (DOF, DOF):
        raise ValueError(f"{name} must be {DOF}x{DOF}")
    if not np.allclose(m, m.T, atol=1e-9):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(m)
    if strict and eigs.min() <= 0:
        raise ValueError(f"{name} must be positive-definite")
    if not strict and eigs.min() < -1e-12:
        raise ValueError(f"{name} must be positive-semidefinite")


@dataclass(frozen=True, eq=False)
class ImpedanceGains:
    """Desired inertia, damping and stiffness matrices of the impedance law."""

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray

    def __post_init__(self) -> None:
        M = np.asarray(self.M, dtype=float)
        D = np.asarray(self.D, dtype=float)
        K = np.asarray(self.K, dtype=float)
        _check_spd("M", M, strict=True)
        _check_spd("D", D, strict=False)
        _check_spd("K", K, strict=False)
        pos_block = K[_POSITION, _POSITION]
        if np.linalg.eigvalsh(pos_block).min() <= 0:
            raise ValueError("K must be positive-definite on the position block")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "K", K)

    @classmethod
    def default(
        cls,
        k_position: float = 400.0,
        k_orientation: float = 100.0,
        k_gripper: float = 400.0,
        m_diag: float = 1.0,
    ) -> "ImpedanceGains":
        """Diagonal gains critically damped per axis: D_ii = 2*sqrt(M_ii*K_ii)."""
        k = np.array([k_position] * 3 + [k_orientation] * 3 + [k_gripper])
        m = np.full(DOF, m_diag)
        d = 2.0 * np.sqrt(m * k)
        return cls(M=np.diag(m), D=np.diag(d), K=np.diag(k))

    def scaled(self, factor: float) -> "ImpedanceGains":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return ImpedanceGains(M=self.M * factor, D=self.D * factor, K=self.K * factor)


def torque(
    x: Sequence[float],
    v: Sequence[float],
    a: Sequence[float],
    x_tilde_t: Sequence[float],
    gains: ImpedanceGains,
) -> np.ndarray:
    """External torque implied by the impedance law: M a + D v + K (x - x_tilde_t)."""
    xv = np.asarray(x, dtype=float)
    vv = np.asarray(v, dtype=float)
    av = np.asarray(a, dtype=float)
    tv = np.asarray(x_tilde_t, dtype=float)
    return gains.M @ av + gains.D @ vv + gains.K @ (xv - tv)


@dataclass
class _Sample:
    t: float
    x: np.ndarray
    v: np.ndarray


@dataclass(eq=False)
class ArmController:
    """Single-owner controller state, stepped by exactly one simulation loop.

    Observers get immutable copies through :meth:`snapshot`; nothing here is
    thread-safe by design.
    """

    start: Sequence[float] = (0.0, 0.0, 0.5, 0.0, 0.0, 0.0, APERTURE_MAX)
    gains: ImpedanceGains = field(default_factory=ImpedanceGains.default)
    omega1: float = DEFAULT_OMEGA1
    bounds: Box = field(default_factory=Box)
    velocity_limit: float = VELOCITY_LIMIT
    settle_horizon: float = 1.0

    def __post_init__(self) -> None:
        x0 = as_config(self.start)
        if not self.bounds.contains(x0[_POSITION]):
            raise OutOfWorkspace(f"start position {x0[_POSITION]} outside bounds")
        if self.omega1 <= 0:
            raise ValueError("omega1 must be positive")
        self.x = x0.copy()
        self.v = np.zeros(DOF)
        self.x_tilde = x0.copy()
        self.x_tilde_t = x0.copy()
        self.t = 0.0
        self._tracker_v = np.zeros(DOF)
        self._minv = np.linalg.inv(self.gains.M)
        self._history: deque[_Sample] = deque()

    # -- targets ---------------------------------------------------------

    def set_target(self, target: Sequence[float]) -> None:
        """Install a new discrete target; current pose and interim target keep.

        Raises OutOfWorkspace when the position block leaves the workspace box
        or an orientation component leaves (-pi/2, pi/2).
        """
        tgt = as_config(target)
        if not self.bounds.contains(tgt[_POSITION]):
            raise OutOfWorkspace(
                f"target position {tgt[_POSITION].tolist()} outside workspace"
            )
        if np.any(np.abs(tgt[_ORIENTATION]) >= ORIENTATION_LIMIT):
            raise OutOfWorkspace(
                f"orientation {tgt[_ORIENTATION].tolist()} outside (-pi/2, pi/2)"
            )
        self.x_tilde = tgt

    # -- stepping ---------------------------------------------------------

    def interim_step(self, dt: float) -> np.ndarray:
        """Advance the interim target one tracker step toward the discrete one.

        Returns the new interim target.  The displacement is capped so that
        ``|delta| <= (omega1 * |x_tilde - x_tilde_t| + eps) * dt``.
        """
        self._check_dt(dt)
        err = self.x_tilde_t - self.x_tilde
        cap = self.omega1 * math.sqrt(float(err @ err)) + 1e-9
        u = self._tracker_v
        u = u + dt * (-2.0 * self.omega1 * u - self.omega1**2 * err)
        speed = math.sqrt(float(u @ u))
        if speed > cap:
            u = u * (cap / speed)
        self._tracker_v = u
        self.x_tilde_t = self.x_tilde_t + dt * u
        return self.x_tilde_t.copy()

    def step(self, dt: float) -> None:
        """One fixed-timestep tick: interim target, then impedance dynamics."""
        self._check_dt(dt)
        self.interim_step(dt)
        accel = self._minv @ (
            -self.gains.D @ self.v - self.gains.K @ (self.x - self.x_tilde_t)
        )
        self.v = self.v + dt * accel
        self.x = self.x + dt * self.v
        if self.x[_APERTURE] < 0.0 or self.x[_APERTURE] > APERTURE_MAX:
            self.x[_APERTURE] = min(max(self.x[_APERTURE], 0.0), APERTURE_MAX)
            self.v[_APERTURE] = 0.0
        self.t += dt
        speed = math.sqrt(float(self.v @ self.v))
        if speed > self.velocity_limit:
            raise Diverged(
                f"velocity {speed:.1f} exceeds limit {self.velocity_limit}; "
                "gains are unstable"
            )
        self._record()

    def _check_dt(self, dt: float) -> None:
        if not (0.0 < dt <= MAX_DT):
            raise ValueError(f"dt must be in (0, {MAX_DT}], got {dt}")

    def _record(self) -> None:
        self._history.append(_Sample(self.t, self.x.copy(), self.v.copy()))
        horizon = self.t - self.settle_horizon
        while self._history and self._history[0].t < horizon - 1e-12:
            self._history.popleft()

    # -- queries ----------------------------------------------------------

    def settled(
        self,
        eps: float,
        hold: float,
        axes: Sequence[int] = (0, 1, 2),
    ) -> bool:
        """True when the selected axes have tracked the discrete target.

        The max-norm error against ``x_tilde`` must stay within ``eps`` and
        the max-norm velocity within ``eps / hold`` continuously over the
        trailing ``hold`` seconds (history permitting; a freshly created
        controller at rest counts as settled).
        """
        if eps <= 0:
            raise ValueError("eps must be positive")
        if hold < 0:
            raise ValueError("hold must be non-negative")
        if hold > self.settle_horizon:
            raise ValueError(
                f"hold {hold} exceeds settle horizon {self.settle_horizon}"
            )
        idx = list(axes)
        v_limit = eps / hold if hold > 0 else math.inf
        target = [float(self.x_tilde[i]) for i in idx]

        def ok(x: np.ndarray, v: np.ndarray) -> bool:
            # Scanned per sample on the hot path; plain float math on purpose.
            for j, i in enumerate(idx):
                if abs(float(x[i]) - target[j]) > eps or abs(float(v[i])) > v_limit:
                    return False
            return True

        if not ok(self.x, self.v):
            return False
        window_start = self.t - hold
        for sample in reversed(self._history):
            if sample.t < window_start - 1e-12:
                break
            if not ok(sample.x, sample.v):
                return False
        return True

    def external_torque(self) -> np.ndarray:
        """Current torque telemetry from the impedance law at zero commanded accel."""
        return torque(self.x, self.v, np.zeros(DOF), self.x_tilde_t, self.gains)

    def snapshot(self) -> dict:
        """JSON-ready copy of the observable state for telemetry."""
        return {
            "t": float(self.t),
            "x": [float(c) for c in self.x],
            "v": [float(c) for c in self.v],
            "target": [float(c) for c in self.x_tilde],
            "interim": [float(c) for c in self.x_tilde_t],
        }
