"""Plant simulators, controllers, and integration utilities."""

from bopest.dynamics.integrators import (
    DIVERGENCE_LIMIT,
    SimulationDiverged,
    euler_step,
    rk4_step,
    step,
)
from bopest.dynamics.pendulum import (
    PendulumGains,
    PendulumParams,
    PendulumReference,
    PendulumSchedule,
    pendulum_control,
    pendulum_deriv,
    pendulum_energy,
    pendulum_step,
    predicted_accel,
)
from bopest.dynamics.quadrotor import (
    GeometricController,
    QuadrotorGains,
    QuadrotorParams,
    QuadrotorSchedule,
    QuadrotorState,
    SinusoidReference,
    hover_reference,
    initial_state,
    mass_schedule,
    predicted_derivatives,
    quadrotor_deriv,
    quadrotor_step,
)
from bopest.dynamics.so3 import (
    hat,
    orthonormality_error,
    project_rotation,
    skew_part,
    vee,
)

__all__ = [
    "DIVERGENCE_LIMIT",
    "GeometricController",
    "PendulumGains",
    "PendulumParams",
    "PendulumReference",
    "PendulumSchedule",
    "QuadrotorGains",
    "QuadrotorParams",
    "QuadrotorSchedule",
    "QuadrotorState",
    "SimulationDiverged",
    "SinusoidReference",
    "euler_step",
    "hat",
    "hover_reference",
    "initial_state",
    "mass_schedule",
    "orthonormality_error",
    "pendulum_control",
    "pendulum_deriv",
    "pendulum_energy",
    "pendulum_step",
    "predicted_accel",
    "predicted_derivatives",
    "project_rotation",
    "quadrotor_deriv",
    "quadrotor_step",
    "rk4_step",
    "skew_part",
    "step",
    "vee",
]
