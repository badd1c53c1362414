"""Plants, controllers, integrators: hand-value checks, conservation and
convergence properties, closed-loop behavior."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bopest.dynamics import (
    GeometricController,
    PendulumGains,
    PendulumParams,
    PendulumReference,
    PendulumSchedule,
    QuadrotorGains,
    QuadrotorParams,
    QuadrotorSchedule,
    QuadrotorState,
    SimulationDiverged,
    SinusoidReference,
    hat,
    hover_reference,
    initial_state,
    mass_schedule,
    orthonormality_error,
    pendulum_control,
    pendulum_deriv,
    pendulum_energy,
    pendulum_step,
    predicted_accel,
    predicted_derivatives,
    project_rotation,
    quadrotor_deriv,
    quadrotor_step,
    skew_part,
    step,
    vee,
)

# Frozen by scalar evaluation of the plant equation at
# x=[0.3, 0.2], u=0.5, m=1.75, l=0.75, b=0.1:
PEND_ACC_CASE = -3.4958804936065118
# One Euler step from [0.1, -0.2], u=0.3, dt=0.01, same params:
EULER_NEXT = (0.098, -0.21065821089740513)
# Schedule values (scalar evaluation of the piecewise law):
MHAT_1_5 = 1.3652821602557292
MHAT_3 = 1.1427040193586064
MHAT_8 = 1.1741674573438363
JX_5 = 3.5220000000000002
JZ_5 = 6.822

PEND = PendulumParams(1.75, 0.75, 0.1)
coords = st.floats(-10, 10, allow_nan=False)


class TestSo3:
    def test_hat_zero(self):
        np.testing.assert_array_equal(hat(np.zeros(3)), np.zeros((3, 3)))

    def test_hat_cross_product_case(self):
        np.testing.assert_allclose(hat([1.0, 0, 0]) @ [0, 1.0, 0], [0, 0, 1.0])

    @given(a=st.tuples(coords, coords, coords), b=st.tuples(coords, coords, coords))
    @settings(max_examples=50, deadline=None)
    def test_hat_matches_cross(self, a, b):
        a, b = np.array(a), np.array(b)
        np.testing.assert_allclose(hat(a) @ b, np.cross(a, b), atol=1e-9)

    @given(v=st.tuples(coords, coords, coords))
    @settings(max_examples=50, deadline=None)
    def test_vee_roundtrip(self, v):
        np.testing.assert_array_equal(vee(hat(np.array(v))), np.array(v))

    def test_vee_rejects_non_skew(self):
        with pytest.raises(ValueError, match="skew"):
            vee(np.eye(3))
        with pytest.raises(ValueError):
            vee(np.zeros((2, 2)))

    def test_skew_part_enables_vee(self):
        S = hat(np.array([1.0, 2.0, 3.0])) + 1e-7 * np.ones((3, 3))
        with pytest.raises(ValueError):
            vee(S)
        np.testing.assert_allclose(vee(skew_part(S)), [1.0, 2.0, 3.0], atol=1e-7)

    def test_project_rotation(self):
        rng = np.random.default_rng(0)
        R = project_rotation(np.eye(3) + 0.05 * rng.normal(size=(3, 3)))
        assert orthonormality_error(R) < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
        # exact rotations are fixed points
        np.testing.assert_allclose(project_rotation(R), R, atol=1e-12)


class TestIntegrators:
    def test_zero_derivative_keeps_state(self):
        y = np.array([1.0, -2.0])
        out = step(lambda t, y: np.zeros(2), y, 0.0, 0.01, "euler")
        np.testing.assert_array_equal(out, y)

    def test_euler_matches_hand_arithmetic(self):
        out = pendulum_step(np.array([0.1, -0.2]), 0.3, PEND, 0.01, "euler")
        np.testing.assert_allclose(out, EULER_NEXT, atol=1e-15)

    def test_rk4_agrees_with_refined_euler(self):
        # free swing; oracle is explicit Euler at dt/100 in scalar arithmetic
        # (Euler's O(dt) error dominates the comparison: it needs dt ~ 4e-7
        # before the two integrators meet at the 1e-5 level)
        dt = 4e-5
        T = 1.0
        f = lambda t, y: pendulum_deriv(y, 0.0, PEND)
        y = np.array([0.3, 0.0])
        for k in range(int(round(T / dt))):
            y = step(f, y, k * dt, dt, "rk4")

        g_over_l = PEND.gravity / PEND.length
        b_over_m = PEND.damping / PEND.mass
        dte = dt / 100.0
        x1, x2 = 0.3, 0.0
        for _ in range(int(round(T / dte))):
            x1, x2 = x1 + dte * x2, x2 + dte * (-g_over_l * math.sin(x1) - b_over_m * x2)
        assert abs(y[0] - x1) < 1e-5
        assert abs(y[1] - x2) < 1e-5

    def test_rk4_fourth_order_ratio(self):
        f = lambda t, y: pendulum_deriv(y, 0.0, PEND)

        def endpoint(dt):
            y = np.array([1.0, 0.0])
            for k in range(int(round(1.0 / dt))):
                y = step(f, y, k * dt, dt, "rk4")
            return y

        ref = endpoint(0.0004)
        e_coarse = np.linalg.norm(endpoint(0.02) - ref)
        e_fine = np.linalg.norm(endpoint(0.01) - ref)
        assert 12.0 < e_coarse / e_fine < 20.0

    def test_divergence_detection(self):
        with pytest.raises(SimulationDiverged) as exc:
            step(lambda t, y: np.array([np.nan]), np.zeros(1), 2.0, 0.5)
        assert exc.value.time == pytest.approx(2.5)
        with pytest.raises(SimulationDiverged):
            step(lambda t, y: np.array([1e12]), np.zeros(1), 0.0, 1.0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            step(lambda t, y: y, np.zeros(1), 0.0, -0.1)
        with pytest.raises(ValueError, match="integrator"):
            step(lambda t, y: y, np.zeros(1), 0.0, 0.1, "verlet")


class TestPendulum:
    def test_equilibrium(self):
        np.testing.assert_array_equal(
            pendulum_deriv(np.zeros(2), 0.0, PEND), np.zeros(2)
        )

    def test_horizontal_gravity_only(self):
        p = PendulumParams(1.0, 1.0, 0.0)
        out = pendulum_deriv(np.array([np.pi / 2, 0.0]), 0.0, p)
        np.testing.assert_allclose(out, [0.0, -9.81])

    def test_deriv_frozen_case(self):
        out = pendulum_deriv(np.array([0.3, 0.2]), 0.5, PEND)
        assert out[0] == 0.2
        assert out[1] == pytest.approx(PEND_ACC_CASE, abs=1e-14)

    def test_control_at_reference_is_gravity_compensation(self):
        ref = PendulumReference(np.pi / 3)
        state = np.array([np.pi / 3, 0.0])
        u = pendulum_control(state, ref, 0.0, PendulumGains(), PEND)
        assert u == pytest.approx(PEND.mass * PEND.gravity * np.sin(np.pi / 3))

    def test_predicted_accel_matches_plant_at_true_params(self):
        state = np.array([0.7, -0.4])
        u = 1.3
        model = predicted_accel(
            state, u, np.array([PEND.mass, PEND.length]), PEND.damping, PEND.gravity
        )
        assert model[0] == pytest.approx(pendulum_deriv(state, u, PEND)[1], abs=1e-14)

    def test_closed_loop_converges_with_true_params(self):
        ref = PendulumReference(np.pi / 3)
        gains = PendulumGains()
        state = np.zeros(2)
        dt = 0.005
        worst_after_2s = 0.0
        for k in range(int(4.0 / dt)):
            t = k * dt
            u = pendulum_control(state, ref, t, gains, PEND)
            state = pendulum_step(state, u, PEND, dt, "euler", t)
            if t >= 2.0:
                worst_after_2s = max(worst_after_2s, abs(state[0] - np.pi / 3))
        assert worst_after_2s < 0.01

    def test_frozen_nominal_fails_after_jump(self):
        sched = PendulumSchedule()
        ref = PendulumReference(np.pi / 3)
        gains = PendulumGains()
        nominal = sched.nominal
        state = np.zeros(2)
        dt = 0.005
        for k in range(int(6.0 / dt)):
            t = k * dt
            u = pendulum_control(state, ref, t, gains, nominal)
            state = pendulum_step(state, u, sched(t), dt, "euler", t)
        assert abs(state[0] - np.pi / 3) > 0.05

    def test_dissipation_monotone(self):
        p = PendulumParams(1.75, 0.75, 0.1)
        state = np.array([1.2, 0.0])
        dt = 1e-3
        prev = pendulum_energy(state, p)
        for k in range(10_000):
            state = pendulum_step(state, 0.0, p, dt, "rk4", k * dt)
            e = pendulum_energy(state, p)
            assert e <= prev + 1e-12
            prev = e

    def test_energy_zero_at_rest_bottom(self):
        assert pendulum_energy(np.zeros(2), PEND) == 0.0

    def test_schedule_jump(self):
        sched = PendulumSchedule()
        assert sched(0.0).mass == 1.75 and sched(0.0).length == 0.75
        assert sched(2.999).mass == 1.75
        assert sched(3.0).mass == 4.271 and sched(3.0).length == 0.981
        assert sched.nominal == sched(0.0)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            PendulumParams(-1.0, 0.5)
        with pytest.raises(ValueError):
            PendulumParams(1.0, 0.5, damping=-0.1)
        with pytest.raises(ValueError):
            predicted_accel(np.zeros(2), 0.0, np.array([-1.0, 0.5]), 0.1, 9.81)
        with pytest.raises(ValueError):
            PendulumGains(kp=0.0)


QUAD = QuadrotorParams(1.25, np.array([1.1, 1.1, 2.2]))


def _oracle_omega_dot(omega, J, M):
    # explicit component arithmetic for J^{-1}(M - Omega x J Omega)
    Jw = [J[i] * omega[i] for i in range(3)]
    cx = [
        omega[1] * Jw[2] - omega[2] * Jw[1],
        omega[2] * Jw[0] - omega[0] * Jw[2],
        omega[0] * Jw[1] - omega[1] * Jw[0],
    ]
    return np.array([(M[i] - cx[i]) / J[i] for i in range(3)])


class TestQuadrotorDynamics:
    def test_hover_balance(self):
        s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
        d = quadrotor_deriv(s, QUAD.mass * QUAD.gravity, np.zeros(3), QUAD)
        np.testing.assert_allclose(d, np.zeros(18), atol=1e-15)

    def test_free_fall(self):
        s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
        d = quadrotor_deriv(s, 0.0, np.zeros(3), QUAD)
        np.testing.assert_allclose(d[3:6], [0.0, 0.0, QUAD.gravity])

    def test_principal_axis_spin(self):
        s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.array([1.0, 0, 0]))
        d = quadrotor_deriv(s, QUAD.mass * QUAD.gravity, np.zeros(3), QUAD)
        np.testing.assert_allclose(d[15:18], np.zeros(3), atol=1e-15)

    def test_angular_acceleration_matches_oracle(self):
        omega = np.array([0.7, -1.2, 0.4])
        M = np.array([0.3, 0.1, -0.2])
        s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), omega)
        d = quadrotor_deriv(s, 5.0, M, QUAD)
        np.testing.assert_allclose(
            d[15:18], _oracle_omega_dot(omega, QUAD.inertia, M), atol=1e-12
        )

    def test_predicted_derivatives_match_plant_at_true_params(self):
        rng = np.random.default_rng(3)
        s = QuadrotorState(
            rng.normal(size=3),
            rng.normal(size=3),
            project_rotation(np.eye(3) + 0.1 * rng.normal(size=(3, 3))),
            rng.normal(size=3),
        )
        F, M = 11.0, np.array([0.2, -0.1, 0.05])
        theta = np.concatenate([[QUAD.mass], QUAD.inertia])
        model = predicted_derivatives(s, F, M, theta, QUAD.gravity)
        truth = quadrotor_deriv(s, F, M, QUAD)[3:6], quadrotor_deriv(s, F, M, QUAD)[15:18]
        np.testing.assert_allclose(model, np.concatenate(truth), atol=1e-12)

    def test_state_validation(self):
        with pytest.raises(ValueError, match="SO"):
            QuadrotorState(np.zeros(3), np.zeros(3), 1.1 * np.eye(3), np.zeros(3))
        with pytest.raises(ValueError):
            QuadrotorParams(1.0, np.array([1.0, -1.0, 1.0]))
        with pytest.raises(ValueError):
            predicted_derivatives(
                QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3)),
                1.0,
                np.zeros(3),
                np.array([1.0, 1.0, -0.5, 1.0]),
                9.81,
            )


class TestGeometricController:
    def test_hover_control(self):
        ref = hover_reference()
        ctrl = GeometricController(QuadrotorGains(), QUAD)
        s = initial_state(ref)
        F, M = ctrl(s, ref, 0.0)
        assert F == pytest.approx(QUAD.mass * QUAD.gravity, abs=1e-9)
        np.testing.assert_allclose(M, np.zeros(3), atol=1e-9)

    def test_attitude_error_zero_at_desired(self):
        Rd = project_rotation(np.eye(3) + 0.2 * np.arange(9).reshape(3, 3))
        e_R = vee(skew_part(Rd.T @ Rd))
        np.testing.assert_array_equal(e_R, np.zeros(3))

    def test_attitude_error_half_convention(self):
        # Rotation about z by a: e_R = 1/2 vee(Rd^T R - R^T Rd) = [0, 0, sin a]
        a = 0.3
        c, s = np.cos(a), np.sin(a)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        e_R = vee(skew_part(np.eye(3).T @ R))
        np.testing.assert_allclose(e_R, [0.0, 0.0, np.sin(a)], atol=1e-12)

    def test_hover_fixed_point_no_drift(self):
        ref = hover_reference()
        ctrl = GeometricController(QuadrotorGains(), QUAD)
        s = initial_state(ref)
        dt = 0.005
        for k in range(int(1.0 / dt)):
            F, M = ctrl(s, ref, k * dt)
            s = quadrotor_step(s, F, M, QUAD, dt, "euler", k * dt)
        assert np.linalg.norm(s.position) < 1e-6
        assert np.linalg.norm(s.velocity) < 1e-6

    def test_tracking_bounded_and_so3_preserved(self):
        ref = SinusoidReference()
        ctrl = GeometricController(QuadrotorGains(), QUAD)
        s = initial_state(ref)
        dt = 0.005
        for k in range(int(8.0 / dt)):
            t = k * dt
            F, M = ctrl(s, ref, t)
            s = quadrotor_step(s, F, M, QUAD, dt, "euler", t)
            assert orthonormality_error(s.rotation) < 1e-6
            assert np.linalg.norm(s.position - ref.position(t + dt)) < 10.0

    def test_parameter_knowledge_improves_tracking(self):
        # The ordering the whole framework rests on: a controller fed the
        # true time-varying parameters (refreshed every 0.65 s) must track
        # far better than one frozen at nominal values, on every axis.
        sched = QuadrotorSchedule()
        ref = SinusoidReference()
        dt = 0.005

        def run(refresh):
            ctrl = GeometricController(QuadrotorGains(), sched.nominal, dt)
            s = initial_state(ref)
            t = 0.0
            next_c = 0.5
            sq = np.zeros(3)
            n = int(round(16.0 / dt))
            for _ in range(n):
                if refresh and t >= next_c:
                    ctrl.reconfigure(sched(t))
                    next_c += 0.65
                F, M = ctrl(s, ref, t)
                s = quadrotor_step(s, F, M, sched(t), dt, "euler", t)
                t += dt
                sq += (s.position - ref.position(t)) ** 2
            return sq / n

        mse_nominal = run(False)
        mse_informed = run(True)
        assert np.all(mse_informed < 0.25 * mse_nominal)
        assert np.all(mse_informed < 0.5)
        assert mse_nominal[0] > 5.0

    def test_reset_clears_feedforward_history(self):
        ref = SinusoidReference()
        dt = 0.005
        a = GeometricController(QuadrotorGains(), QUAD, dt)
        b = GeometricController(QuadrotorGains(), QUAD, dt)
        s = initial_state(ref)
        states = [s]
        for k in range(5):
            F, M = a(states[-1], ref, k * dt)
            b(states[-1], ref, k * dt)
            states.append(quadrotor_step(states[-1], F, M, QUAD, dt, "euler", k * dt))
        a.reset()
        fresh = GeometricController(QuadrotorGains(), QUAD, dt)
        t5 = 5 * dt
        Fa, Ma = a(states[-1], ref, t5)
        Ff, Mf = fresh(states[-1], ref, t5)
        Fb, Mb = b(states[-1], ref, t5)
        np.testing.assert_allclose(Ma, Mf, atol=1e-12)
        assert Fa == pytest.approx(Ff, abs=1e-12)
        # and the un-reset controller differs (feedforward active)
        assert not np.allclose(Mb, Mf, atol=1e-9)

    def test_reconfigure_swaps_estimate(self):
        ctrl = GeometricController(QuadrotorGains(), QUAD)
        heavier = QuadrotorParams(2.0, QUAD.inertia)
        ctrl.reconfigure(heavier)
        ref = hover_reference()
        F, _ = ctrl(initial_state(ref), ref, 0.0)
        assert F == pytest.approx(2.0 * QUAD.gravity, abs=1e-9)

    def test_degenerate_force_direction_holds_attitude(self):
        class FreeFallRef(SinusoidReference):
            def position(self, t):
                return np.zeros(3)

            def velocity(self, t):
                return np.zeros(3)

            def acceleration(self, t):
                return np.array([0.0, 0.0, QUAD.gravity])

            def yaw(self, t):
                return 0.0

        ref = FreeFallRef()
        ctrl = GeometricController(QuadrotorGains(), QUAD)
        s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
        F, M = ctrl(s, ref, 0.0)
        assert ctrl.degenerate_events > 0
        np.testing.assert_array_equal(ctrl.last_Rd, np.eye(3))
        assert abs(F) < 1e-9


class TestSchedules:
    def test_mass_branch_values(self):
        assert mass_schedule(0.0) == 1.25
        assert mass_schedule(1.5) == pytest.approx(MHAT_1_5, abs=1e-14)
        assert mass_schedule(3.0) == pytest.approx(MHAT_3, abs=1e-14)
        assert mass_schedule(4.0) == 1.85
        assert mass_schedule(5.0) == 1.85
        assert mass_schedule(6.0) == 1.85
        assert mass_schedule(8.0) == pytest.approx(MHAT_8, abs=1e-14)
        assert mass_schedule(10.0) == 2.10
        assert mass_schedule(12.0) == 2.10
        assert mass_schedule(12.001) == 1.25
        assert mass_schedule(16.0) == 1.25

    def test_inertia_schedule(self):
        sched = QuadrotorSchedule()
        p5 = sched(5.0)
        assert p5.mass == 1.85
        assert p5.inertia[0] == pytest.approx(JX_5, abs=1e-12)
        assert p5.inertia[1] == pytest.approx(JX_5, abs=1e-12)
        assert p5.inertia[2] == pytest.approx(JZ_5, abs=1e-12)

    def test_matches_published_rows_where_consistent(self):
        # printed true values at t = 1.5 and t = 8.0 agree with the formula
        # to print rounding; other instants are knowingly inconsistent
        sched = QuadrotorSchedule()
        assert abs(sched(1.5).inertia[0] - 3.47) < 0.01
        assert abs(sched(8.0).inertia[0] - 3.44) < 0.01
        assert abs(mass_schedule(8.0) - 1.18) < 0.01

    def test_finite_on_span(self):
        for t in np.linspace(0, 16, 321):
            p = QuadrotorSchedule()(float(t))
            assert np.isfinite(p.mass) and np.all(np.isfinite(p.inertia))

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            mass_schedule(-0.1)
