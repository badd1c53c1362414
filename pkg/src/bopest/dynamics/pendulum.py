"""Actuated planar pendulum: dynamics, feedback-linearizing controller,
and the mass/length step-change schedule.

State is x = [angle, angular rate]. The plant follows
    ẋ₂ = -(g/l) sin x₁ - (b/m) x₂ + u/(m l),
with torque input u. The friction coefficient b is treated as known by
the controller and the estimator (only m and l are searched).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bopest.dynamics.integrators import step as _integrate


@dataclass(frozen=True)
class PendulumParams:
    mass: float
    length: float
    damping: float = 0.1
    gravity: float = 9.81

    def __post_init__(self):
        if self.mass <= 0.0 or self.length <= 0.0:
            raise ValueError("mass and length must be positive")
        if self.damping < 0.0:
            raise ValueError("damping must be nonnegative")


@dataclass(frozen=True)
class PendulumGains:
    kp: float = 16.0
    kd: float = 8.0

    def __post_init__(self):
        if self.kp <= 0.0 or self.kd <= 0.0:
            raise ValueError("gains must be positive")


@dataclass(frozen=True)
class PendulumReference:
    """Constant set-point reference (angle in rad, zero rate)."""

    target: float = np.pi / 3.0

    def angle(self, t: float) -> float:
        return self.target

    def rate(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class PendulumSchedule:
    """True parameters as a function of time: one step change at t_jump."""

    mass_before: float = 1.75
    length_before: float = 0.75
    mass_after: float = 4.271
    length_after: float = 0.981
    t_jump: float = 3.0
    damping: float = 0.1
    gravity: float = 9.81

    def __call__(self, t: float) -> PendulumParams:
        if t < self.t_jump:
            return PendulumParams(
                self.mass_before, self.length_before, self.damping, self.gravity
            )
        return PendulumParams(
            self.mass_after, self.length_after, self.damping, self.gravity
        )

    @property
    def nominal(self) -> PendulumParams:
        return self(0.0)


def pendulum_deriv(state: np.ndarray, u: float, p: PendulumParams) -> np.ndarray:
    x1, x2 = state
    acc = (
        -(p.gravity / p.length) * np.sin(x1)
        - (p.damping / p.mass) * x2
        + u / (p.mass * p.length)
    )
    return np.array([x2, acc])


def predicted_accel(
    state: np.ndarray, u: float, theta: np.ndarray, damping: float, gravity: float
) -> np.ndarray:
    """Model angular acceleration under candidate (mass, length) = theta.

    This is the estimator's parametric dynamics evaluator: only the ẋ₂
    channel is informative about (m, l)."""
    m, l = float(theta[0]), float(theta[1])
    if m <= 0.0 or l <= 0.0:
        raise ValueError("candidate mass and length must be positive")
    x1, x2 = state
    return np.array(
        [-(gravity / l) * np.sin(x1) - (damping / m) * x2 + u / (m * l)]
    )


def pendulum_control(
    state: np.ndarray,
    ref: PendulumReference,
    t: float,
    gains: PendulumGains,
    p_est: PendulumParams,
) -> float:
    """Feedback linearization with errors e_i = reference - state, using the
    estimated parameters: u = ml(K_p e₁ + K_d e₂) + ml((g/l) sin x₁ + (b/m) x₂)."""
    x1, x2 = state
    e1 = ref.angle(t) - x1
    e2 = ref.rate(t) - x2
    ml = p_est.mass * p_est.length
    feedback = ml * (gains.kp * e1 + gains.kd * e2)
    cancellation = ml * (
        (p_est.gravity / p_est.length) * np.sin(x1)
        + (p_est.damping / p_est.mass) * x2
    )
    return float(feedback + cancellation)


def pendulum_step(
    state: np.ndarray,
    u: float,
    p: PendulumParams,
    dt: float,
    method: str = "euler",
    t: float = 0.0,
) -> np.ndarray:
    return _integrate(lambda s, y: pendulum_deriv(y, u, p), state, t, dt, method)


def pendulum_energy(state: np.ndarray, p: PendulumParams) -> float:
    """Mechanical energy consistent with the plant equation: the dynamics
    dissipate it at rate -l² b ẋ₂² under zero torque."""
    x1, x2 = state
    kinetic = 0.5 * p.mass * p.length**2 * x2**2
    potential = p.mass * p.gravity * p.length * (1.0 - np.cos(x1))
    return float(kinetic + potential)
