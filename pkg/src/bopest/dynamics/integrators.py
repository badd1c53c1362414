"""Fixed-step explicit integrators with divergence detection."""

from __future__ import annotations

import numpy as np

METHODS = ("euler", "rk4")

# A state component beyond this magnitude is treated as numerical blow-up
# even while still finite.
DIVERGENCE_LIMIT = 1e8


class SimulationDiverged(RuntimeError):
    """State left the finite/bounded regime; carries the offending time."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6g} s)")
        self.time = float(time)


def euler_step(f, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    return y + dt * f(t, y)


def rk4_step(f, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(f, y: np.ndarray, t: float, dt: float, method: str = "euler") -> np.ndarray:
    """One integration step of ẏ = f(t, y); raises SimulationDiverged if the
    result is non-finite or unreasonably large."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if method == "euler":
        y_next = euler_step(f, y, t, dt)
    elif method == "rk4":
        y_next = rk4_step(f, y, t, dt)
    else:
        raise ValueError(f"unknown integrator {method!r}; choose from {METHODS}")
    if not np.all(np.isfinite(y_next)) or np.any(np.abs(y_next) > DIVERGENCE_LIMIT):
        raise SimulationDiverged("state diverged during integration", time=t + dt)
    return y_next
