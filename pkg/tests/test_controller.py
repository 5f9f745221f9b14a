"""Controller dynamics against independent closed-form and brute-force oracles.

The scalar step-response oracle is derived by partial fractions of the
cascade transfer function

    X(s)/s_target = w1^2 * w2^2 / (s * (s+w1)^2 * (s+w2)^2)

where stage one is the critically damped interim-target tracker (natural
frequency w1) and stage two the critically damped impedance law (w2 =
sqrt(K/M)).  The time-domain solution is

    x(t) = 1 + (Q + R t) e^{-w1 t} + (S + T t) e^{-w2 t}

with the coefficients computed below straight from the pole structure,
independently of the integrator under test.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from verba_arm.controller import (
    APERTURE_MAX,
    ArmController,
    Box,
    Diverged,
    ImpedanceGains,
    OutOfWorkspace,
    as_config,
    torque,
)


def cascade_step_oracle(t: np.ndarray, w1: float, w2: float) -> np.ndarray:
    """Unit-step response of the stage1 -> stage2 cascade (both critical)."""
    d = w2 - w1
    r = -w1 * w2**2 / d**2
    q = -(w2**2) / d**2 + 2 * w1 * w2**2 / d**3
    tt = -(w1**2) * w2 / d**2
    s = -(w1**2) / d**2 - 2 * w1**2 * w2 / d**3
    return 1.0 + (q + r * t) * np.exp(-w1 * t) + (s + tt * t) * np.exp(-w2 * t)


def tracker_step_oracle(t: np.ndarray, w1: float) -> np.ndarray:
    """Closed-form critically damped response 1 - (1 + w1 t) e^{-w1 t}."""
    return 1.0 - (1.0 + w1 * t) * np.exp(-w1 * t)


def make_controller(**kwargs) -> ArmController:
    kwargs.setdefault("start", (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.04))
    return ArmController(**kwargs)


class TestConfigVector:
    def test_aperture_clamped(self):
        x = as_config([0, 0, 0, 0, 0, 0, 0.5])
        assert x[6] == APERTURE_MAX
        x = as_config([0, 0, 0, 0, 0, 0, -0.1])
        assert x[6] == 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            as_config([0, 0, float("nan"), 0, 0, 0, 0])

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            as_config([1, 2, 3])


class TestGains:
    def test_default_critical_damping(self):
        g = ImpedanceGains.default()
        assert np.allclose(np.diag(g.K), [400] * 3 + [100] * 3 + [400])
        assert np.allclose(np.diag(g.D), 2 * np.sqrt(np.diag(g.M) * np.diag(g.K)))

    def test_asymmetric_matrix_rejected(self):
        m = np.eye(7)
        k = np.eye(7)
        k[0, 1] = 5.0
        with pytest.raises(ValueError):
            ImpedanceGains(M=m, D=np.zeros((7, 7)), K=k)

    def test_indefinite_inertia_rejected(self):
        m = np.eye(7)
        m[3, 3] = -1.0
        with pytest.raises(ValueError):
            ImpedanceGains(M=m, D=np.zeros((7, 7)), K=np.eye(7))


class TestTorque:
    def test_equilibrium_is_exactly_zero(self):
        g = ImpedanceGains.default()
        x = as_config([0.1, 0.2, 0.3, 0.1, -0.1, 0.0, 0.02])
        tau = torque(x, np.zeros(7), np.zeros(7), x, g)
        assert np.all(tau == 0.0)

    def test_identity_gains_reduce_to_error(self):
        g = ImpedanceGains(M=np.eye(7), D=np.zeros((7, 7)), K=np.eye(7))
        x = np.zeros(7)
        x_tilde_t = np.zeros(7)
        e = np.array([0.1, -0.2, 0.3, 0.0, 0.1, -0.1, 0.01])
        tau = torque(x + e, np.zeros(7), np.zeros(7), x_tilde_t, g)
        assert np.allclose(tau, e)

    def test_matches_scalar_expansion_on_random_inputs(self):
        # Brute-force per-component expansion, no matrix algebra.
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = rng.uniform(0.5, 3.0, 7)
            d = rng.uniform(0.0, 5.0, 7)
            k = rng.uniform(0.1, 500.0, 7)
            g = ImpedanceGains(M=np.diag(m), D=np.diag(d), K=np.diag(k))
            x = rng.uniform(-1, 1, 7)
            v = rng.uniform(-2, 2, 7)
            a = rng.uniform(-2, 2, 7)
            xt = rng.uniform(-1, 1, 7)
            expected = [
                m[i] * a[i] + d[i] * v[i] + k[i] * (x[i] - xt[i]) for i in range(7)
            ]
            assert np.allclose(torque(x, v, a, xt, g), expected, atol=1e-12)


class TestSetTarget:
    def test_out_of_workspace_position(self):
        ctrl = make_controller()
        with pytest.raises(OutOfWorkspace):
            ctrl.set_target([0, 0, 99.0, 0, 0, 0, 0.0])

    def test_orientation_limit(self):
        ctrl = make_controller()
        with pytest.raises(OutOfWorkspace):
            ctrl.set_target([0, 0, 0, 2.0, 0, 0, 0.0])

    def test_target_install_leaves_pose_and_interim(self):
        ctrl = make_controller()
        before_interim = ctrl.x_tilde_t.copy()
        before_x = ctrl.x.copy()
        ctrl.set_target([0.5, 0, 0, 0, 0, 0, 0.04])
        assert np.array_equal(ctrl.x_tilde_t, before_interim)
        assert np.array_equal(ctrl.x, before_x)
        assert ctrl.x_tilde[0] == 0.5

    def test_fixed_point_at_equilibrium(self):
        ctrl = make_controller()
        ctrl.set_target(ctrl.x.copy())
        x0 = ctrl.x.copy()
        for _ in range(100):
            ctrl.step(1e-3)
        assert np.allclose(ctrl.x, x0, atol=1e-12)
        assert np.allclose(ctrl.v, 0.0, atol=1e-12)


class TestInterimTracker:
    def test_matches_closed_form_scalar_step(self):
        ctrl = make_controller()
        target = ctrl.x.copy()
        target[0] = 1.0
        ctrl.set_target(target)
        dt = 1e-3
        n = int(2.0 / dt)
        trajectory = np.empty(n + 1)
        trajectory[0] = ctrl.x_tilde_t[0]
        for k in range(n):
            ctrl.interim_step(dt)
            trajectory[k + 1] = ctrl.x_tilde_t[0]
        t = np.arange(n + 1) * dt
        oracle = tracker_step_oracle(t, ctrl.omega1)
        assert np.max(np.abs(trajectory - oracle)) < 5e-3  # first-order in dt

    def test_equilibrium_interim_is_fixed(self):
        ctrl = make_controller()
        before = ctrl.x_tilde_t.copy()
        ctrl.interim_step(1e-3)
        assert np.array_equal(ctrl.x_tilde_t, before)

    def test_two_half_steps_commute_with_one_to_second_order(self):
        def run(dts):
            ctrl = make_controller()
            target = ctrl.x.copy()
            target[0] = 1.0
            ctrl.set_target(target)
            for dt in dts:
                ctrl.interim_step(dt)
            return ctrl.x_tilde_t[0]

        dt = 2e-3
        coarse = run([dt])
        fine = run([dt / 2, dt / 2])
        # First-order method: halving dt moves the result by O(dt^2) with the
        # tracker's own curvature scale omega1^2 as the constant.
        assert abs(coarse - fine) < 8.0**2 * dt**2

    def test_per_axis_monotone_approach_from_rest(self):
        ctrl = make_controller()
        target = ctrl.x.copy()
        target[0] += 1.0
        target[1] -= 0.8
        target[6] = 0.0
        ctrl.set_target(target)
        previous = ctrl.x_tilde_t.copy()
        for _ in range(4000):
            ctrl.interim_step(1e-3)
            delta_now = ctrl.x_tilde_t - previous
            remaining = target - ctrl.x_tilde_t
            for axis in (0, 1, 6):
                # never moves away from the target nor past it
                assert delta_now[axis] * (target[axis] - previous[axis]) >= -1e-15
                assert remaining[axis] * (target[axis] - ctrl.start[axis]) >= -1e-9
            previous = ctrl.x_tilde_t.copy()

    def test_per_step_jump_bounded_by_velocity_cap(self):
        rng = np.random.default_rng(3)
        ctrl = make_controller()
        dt = 1e-3
        for step in range(4000):
            if step % 500 == 0:
                tgt = np.zeros(7)
                tgt[0:3] = rng.uniform(-1.0, 1.0, 3)
                tgt[6] = rng.uniform(0, APERTURE_MAX)
                ctrl.set_target(tgt)
            before = ctrl.x_tilde_t.copy()
            err = float(np.linalg.norm(before - ctrl.x_tilde))
            cap = ctrl.omega1 * err + 1e-9
            ctrl.step(dt)
            jump = float(np.linalg.norm(ctrl.x_tilde_t - before))
            assert jump <= cap * dt + 1e-12


class TestStepResponse:
    def test_scalar_step_matches_cascade_oracle_to_one_percent(self):
        ctrl = make_controller()
        target = ctrl.x.copy()
        target[0] = 1.0
        ctrl.set_target(target)
        dt = 1e-3
        n = int(3.0 / dt)
        xs = np.empty(n + 1)
        xs[0] = ctrl.x[0]
        for k in range(n):
            ctrl.step(dt)
            xs[k + 1] = ctrl.x[0]
        t = np.arange(n + 1) * dt
        w2 = math.sqrt(400.0)  # default position stiffness over unit inertia
        oracle = cascade_step_oracle(t, ctrl.omega1, w2)
        assert np.max(np.abs(xs - oracle)) < 0.01  # 1% of the unit step

    def test_no_overshoot_and_millimeter_convergence_within_3s(self):
        ctrl = make_controller()
        target = ctrl.x.copy()
        target[0] = 1.0
        ctrl.set_target(target)
        peak = -np.inf
        for _ in range(3000):
            ctrl.step(1e-3)
            peak = max(peak, ctrl.x[0])
        assert peak <= 1.0 + 1e-6
        assert abs(ctrl.x[0] - 1.0) < 1e-3

    def test_energy_conserved_without_damping(self):
        # Unit gains, no damping, fixed interim target: symplectic Euler keeps
        # the oscillator energy bounded.
        g = ImpedanceGains(M=np.eye(7), D=np.zeros((7, 7)), K=np.eye(7))
        ctrl = make_controller(gains=g)
        ctrl.x[0] += 0.7  # displaced; target stays at origin block
        e0 = 0.5 * ctrl.v @ ctrl.v + 0.5 * (ctrl.x - ctrl.x_tilde_t) @ (
            ctrl.x - ctrl.x_tilde_t
        )
        worst = 0.0
        for _ in range(10_000):
            ctrl.step(1e-3)
            e = 0.5 * ctrl.v @ ctrl.v + 0.5 * (ctrl.x - ctrl.x_tilde_t) @ (
                ctrl.x - ctrl.x_tilde_t
            )
            worst = max(worst, abs(e - e0) / e0)
        assert worst < 1e-3

    def test_energy_never_increases_with_default_gains(self):
        rng = np.random.default_rng(11)
        g = ImpedanceGains.default()
        ctrl = make_controller()
        dt = 1e-3
        for _ in range(3000):
            if rng.uniform() < 0.01:
                ctrl.v = rng.uniform(-3, 3, 7)
                ctrl.v[6] = 0.0
            e = ctrl.x - ctrl.x_tilde_t
            before = 0.5 * ctrl.v @ g.M @ ctrl.v + 0.5 * e @ g.K @ e
            ctrl.step(dt)
            e = ctrl.x - ctrl.x_tilde_t
            after = 0.5 * ctrl.v @ g.M @ ctrl.v + 0.5 * e @ g.K @ e
            assert after <= before * (1 + 1e-3) + 1e-15

    def test_finite_difference_acceleration_consistency(self):
        ctrl = make_controller()
        target = ctrl.x.copy()
        target[0:3] = [0.8, -0.5, 0.6]
        ctrl.set_target(target)
        dt = 1e-3
        g = ctrl.gains
        minv = np.linalg.inv(g.M)
        rows = []
        for _ in range(1500):
            x, v = ctrl.x.copy(), ctrl.v.copy()
            ctrl.step(dt)
            # The step advanced the interim target first; the analytic
            # acceleration pairs with the post-advance interim value.
            analytic = minv @ (-g.D @ v - g.K @ (x - ctrl.x_tilde_t))
            rows.append(((ctrl.v - v) / dt, analytic))
        fd_err = max(float(np.max(np.abs(fd - an))) for fd, an in rows)
        jerk = max(
            float(np.max(np.abs(rows[i + 1][1] - rows[i][1]))) / dt
            for i in range(len(rows) - 1)
        )
        assert fd_err <= 10 * dt * jerk + 1e-9

    def test_gain_scaling_leaves_trajectory_unchanged(self):
        def trajectory(scale):
            g = ImpedanceGains.default().scaled(scale)
            ctrl = make_controller(gains=g)
            target = ctrl.x.copy()
            target[0:3] = [0.4, 0.3, -0.2]
            ctrl.set_target(target)
            out = []
            for _ in range(2000):
                ctrl.step(1e-3)
                out.append(ctrl.x.copy())
            return np.array(out)

        base = trajectory(1.0)
        scaled = trajectory(3.7)
        rel = np.max(np.abs(base - scaled)) / max(np.max(np.abs(base)), 1e-30)
        assert rel < 1e-9


class TestSettledAndDivergence:
    def test_not_settled_right_after_target_change(self):
        ctrl = make_controller()
        tgt = ctrl.x.copy()
        tgt[0] += 0.5
        ctrl.set_target(tgt)
        assert not ctrl.settled(1e-3, 0.2)

    def test_settles_after_convergence(self):
        ctrl = make_controller()
        tgt = ctrl.x.copy()
        tgt[0] += 0.5
        ctrl.set_target(tgt)
        for _ in range(3000):
            ctrl.step(1e-3)
        assert ctrl.settled(1e-3, 0.2)

    def test_huge_eps_is_always_settled(self):
        ctrl = make_controller()
        tgt = ctrl.x.copy()
        tgt[0] += 1.0
        ctrl.set_target(tgt)
        assert ctrl.settled(1e9, 0.2)
        for _ in range(50):
            ctrl.step(1e-3)
            assert ctrl.settled(1e9, 0.2)

    def test_settled_on_selected_axes(self):
        ctrl = make_controller()
        tgt = ctrl.x.copy()
        tgt[6] = 0.0  # close the gripper; position untouched
        ctrl.set_target(tgt)
        assert ctrl.settled(1e-2, 0.0)  # position axes unaffected
        assert not ctrl.settled(1e-2, 0.0, axes=(6,))
        for _ in range(2000):
            ctrl.step(1e-3)
        assert ctrl.settled(1e-2, 0.2, axes=(6,))

    def test_hold_longer_than_horizon_rejected(self):
        ctrl = make_controller()
        with pytest.raises(ValueError):
            ctrl.settled(1e-3, 5.0)

    def test_divergence_sentinel_fires_for_unstable_gains(self):
        # omega * dt = 3 > 2 puts the undamped integrator past its stability
        # limit; velocity must blow past the sentinel, not turn into NaNs.
        g = ImpedanceGains(M=np.eye(7), D=np.zeros((7, 7)), K=np.eye(7) * 90_000.0)
        ctrl = make_controller(gains=g)
        tgt = ctrl.x.copy()
        tgt[0] += 0.1
        ctrl.set_target(tgt)
        with pytest.raises(Diverged):
            for _ in range(10_000):
                ctrl.step(1e-2)
        assert np.all(np.isfinite(ctrl.x)) and np.all(np.isfinite(ctrl.v))

    def test_dt_bounds_enforced(self):
        ctrl = make_controller()
        with pytest.raises(ValueError):
            ctrl.step(0.02)
        with pytest.raises(ValueError):
            ctrl.step(0.0)


class TestConvergenceProperty:
    def test_random_targets_settle_within_five_seconds(self):
        rng = np.random.default_rng(20260808)
        for _ in range(25):
            ctrl = make_controller()
            tgt = np.zeros(7)
            tgt[0:3] = rng.uniform(-1.4, 1.4, 3)
            tgt[3:6] = rng.uniform(-1.2, 1.2, 3)
            tgt[6] = rng.uniform(0, APERTURE_MAX)
            ctrl.set_target(tgt)
            steps = 0
            while steps < 5000:
                ctrl.step(1e-3)
                steps += 1
                if ctrl.settled(1e-3, 0.2):
                    break
            assert ctrl.settled(1e-3, 0.2), f"did not settle for {tgt}"


class TestLyapunovBulk:
    def test_hundred_thousand_random_steps_never_gain_energy(self):
        rng = np.random.default_rng(99)
        g = ImpedanceGains.default()
        ctrl = make_controller()
        dt = 1e-3
        count = 0
        while count < 100_000:
            # Re-seed the state periodically to cover the state space.
            ctrl.x[0:6] = rng.uniform(-1.0, 1.0, 6)
            ctrl.x[6] = rng.uniform(0.01, 0.07)
            ctrl.v = rng.uniform(-4.0, 4.0, 7)
            ctrl.v[6] = rng.uniform(-0.5, 0.5)
            for _ in range(50):
                e = ctrl.x - ctrl.x_tilde_t
                before = 0.5 * ctrl.v @ g.M @ ctrl.v + 0.5 * e @ g.K @ e
                ctrl.step(dt)
                e = ctrl.x - ctrl.x_tilde_t
                after = 0.5 * ctrl.v @ g.M @ ctrl.v + 0.5 * e @ g.K @ e
                assert after <= before * (1 + 1e-3) + 1e-15
                count += 1
