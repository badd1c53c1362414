"""SE(3) quadrotor: rigid-body dynamics, geometric tracking controller,
sinusoid reference, and the time-varying true-parameter schedule.

Axis convention: e₃ = [0, 0, 1] points along gravity (z-down positive),
so free fall is v̇ = +g e₃ and hover needs thrust F = mg at R = I:

    ṙ = v,   v̇ = g e₃ - (F/m) R e₃,
    Ṙ = R Ω̂,  Ω̇ = J⁻¹ (M - Ω × JΩ).

The controller builds the desired force as
    f_des = m g e₃ - m r̈_d + K_r e_r + K_v e_v,    e_(·) = actual - desired,
i.e. gravity compensation plus feedforward plus PD correction, which is
the unique sign assignment that closes the loop for the z-down dynamics
above (too low → larger e_r_z → more thrust). Attitude follows the
standard geometric law on SO(3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bopest.dynamics.integrators import step as _integrate
from bopest.dynamics.so3 import hat, orthonormality_error, project_rotation, skew_part, vee

E3 = np.array([0.0, 0.0, 1.0])

# Below this norm the desired force direction is undefined; the controller
# holds the previous desired attitude instead.
FORCE_DIRECTION_FLOOR = 1e-9


@dataclass(frozen=True)
class QuadrotorParams:
    """Mass, diagonal inertia (3 principal entries), gravity, and the
    inertial axis offset used only by the parameter schedule."""

    mass: float
    inertia: np.ndarray
    gravity: float = 9.81
    offset: np.ndarray = field(default_factory=lambda: np.array([0.2, 0.2, 0.2]))

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        offset = np.asarray(self.offset, dtype=float)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if inertia.shape != (3,) or np.any(inertia <= 0.0):
            raise ValueError("inertia must be 3 positive diagonal entries")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "offset", offset)

    @property
    def inertia_matrix(self) -> np.ndarray:
        return np.diag(self.inertia)


@dataclass(frozen=True)
class QuadrotorState:
    position: np.ndarray
    velocity: np.ndarray
    rotation: np.ndarray
    body_rate: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "body_rate", np.asarray(self.body_rate, dtype=float))
        if self.rotation.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix")
        if orthonormality_error(self.rotation) > 1e-6:
            raise ValueError("rotation is not in SO(3) to 1e-6")

    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.position, self.velocity, self.rotation.ravel(), self.body_rate]
        )

    @classmethod
    def unpack(cls, y: np.ndarray) -> "QuadrotorState":
        return cls(y[0:3], y[3:6], y[6:15].reshape(3, 3), y[15:18])


@dataclass(frozen=True)
class QuadrotorGains:
    kr: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 5.0]))
    kv: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 2.0]))
    kR: np.ndarray = field(default_factory=lambda: np.array([30.0, 30.0, 30.0]))
    komega: np.ndarray = field(default_factory=lambda: np.array([5.0, 10.0, 20.0]))

    def __post_init__(self):
        for name in ("kr", "kv", "kR", "komega"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or np.any(v <= 0.0):
                raise ValueError(f"{name} must be 3 positive entries")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class SinusoidReference:
    """Per-axis sinusoid position reference with yaw pointing along
    atan2(y_d, x_d). Zero amplitudes give a constant hover reference."""

    amplitudes: np.ndarray = field(default_factory=lambda: np.array([4.0, 5.0, 2.0]))
    frequencies: np.ndarray = field(default_factory=lambda: np.array([0.8, 0.4, 0.4]))
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("amplitudes", "frequencies", "center"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)

    def position(self, t: float) -> np.ndarray:
        return self.center + self.amplitudes * np.sin(self.frequencies * t)

    def velocity(self, t: float) -> np.ndarray:
        return self.amplitudes * self.frequencies * np.cos(self.frequencies * t)

    def acceleration(self, t: float) -> np.ndarray:
        return -self.amplitudes * self.frequencies**2 * np.sin(self.frequencies * t)

    def yaw(self, t: float) -> float:
        p = self.position(t)
        return float(np.arctan2(p[1], p[0]))


def hover_reference(position=(0.0, 0.0, 0.0)) -> SinusoidReference:
    return SinusoidReference(
        amplitudes=np.zeros(3), frequencies=np.zeros(3), center=np.asarray(position)
    )


def initial_state(ref: SinusoidReference, t0: float = 0.0) -> QuadrotorState:
    """Start on the reference with level attitude and zero body rate."""
    return QuadrotorState(ref.position(t0), ref.velocity(t0), np.eye(3), np.zeros(3))


def _deriv_packed(y: np.ndarray, F: float, M: np.ndarray, p: QuadrotorParams) -> np.ndarray:
    # operates on raw packed vectors: integrator intermediates hold slightly
    # non-orthonormal rotations that the strict state type would reject
    v = y[3:6]
    R = y[6:15].reshape(3, 3)
    omega = y[15:18]
    J = p.inertia
    v_dot = p.gravity * E3 - (F / p.mass) * (R @ E3)
    R_dot = R @ hat(omega)
    omega_dot = (np.asarray(M, dtype=float) - np.cross(omega, J * omega)) / J
    return np.concatenate([v, v_dot, R_dot.ravel(), omega_dot])


def quadrotor_deriv(
    state: QuadrotorState, F: float, M: np.ndarray, p: QuadrotorParams
) -> np.ndarray:
    """Packed 18-dim derivative (ṙ, v̇, Ṙ row-major, Ω̇)."""
    return _deriv_packed(state.pack(), F, M, p)


def predicted_derivatives(
    state: QuadrotorState, F: float, M: np.ndarray, theta: np.ndarray, gravity: float
) -> np.ndarray:
    """Model accelerations [v̇; Ω̇] under candidate θ = (m, Jx, Jy, Jz).

    The estimator compares this 6-channel prediction with the observed
    noisy accelerations."""
    theta = np.asarray(theta, dtype=float)
    m, J = float(theta[0]), theta[1:4]
    if m <= 0.0 or np.any(J <= 0.0):
        raise ValueError("candidate mass and inertia entries must be positive")
    omega = state.body_rate
    v_dot = gravity * E3 - (F / m) * (state.rotation @ E3)
    omega_dot = (np.asarray(M, dtype=float) - np.cross(omega, J * omega)) / J
    return np.concatenate([v_dot, omega_dot])


class GeometricController:
    """SE(3) tracking controller with reconfigurable parameter estimates.

    Call once per control period: the desired body rate Ω_d and its
    derivative come from backward differences of the desired-attitude
    sequence across calls, so they include the motion of R_d driven by the
    evolving tracking errors, not just the reference sweep. (Differencing a
    reference-only R_d(t) with the state frozen omits the error-feedback
    term of the desired force — the dominant one during transients — and
    destabilizes the position/attitude cascade.)

    Stateful in three ways: the active parameter estimate (swapped by the
    online estimator via `reconfigure`), the desired-attitude history for
    the differences, and the last desired attitude (held when the desired
    force direction degenerates). One instance per simulation.
    """

    def __init__(
        self,
        gains: QuadrotorGains,
        p_est: QuadrotorParams,
        control_period: float = 0.005,
    ):
        if control_period <= 0.0:
            raise ValueError("control_period must be positive")
        self.gains = gains
        self.p_est = p_est
        self.control_period = control_period
        self.last_Rd = np.eye(3)
        self.degenerate_events = 0
        self._rd_hist: list[np.ndarray] = []

    def reconfigure(self, p_est: QuadrotorParams) -> None:
        # The R_d sequence produced under the old estimate does not continue
        # the one the new estimate will produce (desired force, and with it
        # the desired attitude, jumps with the mass estimate). Differencing
        # across that jump manufactures phantom body-rate commands of order
        # Δangle/h² — large enough to flip the vehicle in one step when the
        # estimator swaps parameters every control period — so the
        # feedforward history restarts with the estimate.
        self.p_est = p_est
        self.reset()

    def reset(self) -> None:
        """Drop the desired-attitude history (fresh feedforward ramp-in)."""
        self._rd_hist.clear()

    def _desired_force(self, state: QuadrotorState, ref, t: float) -> np.ndarray:
        g = self.gains
        m = self.p_est.mass
        e_r = state.position - ref.position(t)
        e_v = state.velocity - ref.velocity(t)
        return (
            m * self.p_est.gravity * E3
            - m * ref.acceleration(t)
            + g.kr * e_r
            + g.kv * e_v
        )

    def _desired_rotation(self, state: QuadrotorState, ref, t: float) -> np.ndarray:
        f_des = self._desired_force(state, ref, t)
        norm = np.linalg.norm(f_des)
        if norm < FORCE_DIRECTION_FLOOR:
            self.degenerate_events += 1
            return self.last_Rd
        b3 = f_des / norm
        yaw = ref.yaw(t)
        b1_yaw = np.array([np.cos(yaw), np.sin(yaw), 0.0])
        b2 = np.cross(b3, b1_yaw)
        b2_norm = np.linalg.norm(b2)
        if b2_norm < FORCE_DIRECTION_FLOOR:  # thrust parallel to yaw heading
            self.degenerate_events += 1
            return self.last_Rd
        b2 = b2 / b2_norm
        b1 = np.cross(b2, b3)
        return np.column_stack([b1, b2, b3])

    def __call__(
        self, state: QuadrotorState, ref, t: float
    ) -> tuple[float, np.ndarray]:
        """Thrust magnitude and body moment for the current state."""
        m = self.p_est.mass
        J = self.p_est.inertia
        g = self.gains

        f_des = self._desired_force(state, ref, t)
        R = state.rotation
        F = float(f_des @ (R @ E3))

        Rd = self._desired_rotation(state, ref, t)
        self.last_Rd = Rd
        self._rd_hist.append(Rd)
        if len(self._rd_hist) > 3:
            self._rd_hist.pop(0)

        # Backward differences of the realized R_d sequence give Ω_d and
        # Ω̇_d; the first two calls run without attitude feedforward.
        h = self.control_period
        if len(self._rd_hist) == 3:
            Rd_m2, Rd_m1, Rd_0 = self._rd_hist
            omega_d = vee(skew_part(Rd_0.T @ (Rd_0 - Rd_m1) / h))
            omega_d_prev = vee(skew_part(Rd_m1.T @ (Rd_m1 - Rd_m2) / h))
            omega_d_dot = (omega_d - omega_d_prev) / h
        else:
            omega_d = np.zeros(3)
            omega_d_dot = np.zeros(3)

        omega = state.body_rate
        # skew_part supplies the 1/2: (Rd^T R - R^T Rd)/2
        e_R = vee(skew_part(Rd.T @ R))
        e_omega = omega - R.T @ Rd @ omega_d

        M = (
            -g.kR * e_R
            - g.komega * e_omega
            + np.cross(omega, J * omega)
            - J * (hat(omega) @ (R.T @ Rd @ omega_d) - R.T @ Rd @ omega_d_dot)
        )
        return F, M


def quadrotor_step(
    state: QuadrotorState,
    F: float,
    M: np.ndarray,
    p: QuadrotorParams,
    dt: float,
    method: str = "euler",
    t: float = 0.0,
) -> QuadrotorState:
    """Advance one step and re-orthonormalize the rotation."""
    y = _integrate(lambda s, yv: _deriv_packed(yv, F, M, p), state.pack(), t, dt, method)
    return QuadrotorState(
        y[0:3], y[3:6], project_rotation(y[6:15].reshape(3, 3)), y[15:18]
    )


def mass_schedule(t: float, m_nominal: float = 1.25) -> float:
    """Piecewise true mass: decaying sinusoid, plateau 1.85, decaying
    sinusoid, plateau 2.10, back to nominal."""
    if t < 0.0:
        raise ValueError("schedule time must be nonnegative")
    if t <= 3.0:
        return 0.2 * np.exp(-0.2 * t) * np.sin(1.5 * t) + m_nominal
    if t <= 6.0:
        return 1.85
    if t <= 9.0:
        return 0.7 * np.exp(-0.2 * t) * np.sin(1.5 * t) + m_nominal
    if t <= 12.0:
        return 2.10
    return m_nominal


@dataclass(frozen=True)
class QuadrotorSchedule:
    """True time-varying parameters: mass per the piecewise law, inertia
    Ĵ_i = 3.0 (J_i + m̂(t) r_i²) per principal axis."""

    nominal: QuadrotorParams = field(
        default_factory=lambda: QuadrotorParams(1.25, np.array([1.1, 1.1, 2.2]))
    )

    def __call__(self, t: float) -> QuadrotorParams:
        m_hat = mass_schedule(t, self.nominal.mass)
        j_hat = 3.0 * (self.nominal.inertia + m_hat * self.nominal.offset**2)
        return QuadrotorParams(
            m_hat, j_hat, self.nominal.gravity, self.nominal.offset
        )
