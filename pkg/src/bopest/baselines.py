"""Local solvers used as comparison methods for the parameter search.

Both run against the same residual objective the surrogate-based search
sees, under a hard evaluation budget, and both return the best point they
actually evaluated (never an extrapolated iterate). Non-finite objective
values are treated as +inf so a stray overflow cannot poison the argmin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .gp import Domain

METHODS = ("local-gradient", "simplex")

# Central-difference probe, as a fraction of the domain width per axis.
GRADIENT_PROBE_FRACTION = 1e-4
# Initial line-search step, as a fraction of the domain diagonal.
INITIAL_STEP_FRACTION = 0.05
STEP_GROWTH = 1.5
STEP_SHRINK = 0.5
MIN_STEP_FRACTION = 1e-6


@dataclass(frozen=True)
class BaselineConfig:
    method: str
    budget: int = 35
    start: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.start is not None:
            object.__setattr__(
                self, "start", np.asarray(self.start, dtype=float).copy()
            )


@dataclass
class BaselineResult:
    point: np.ndarray
    value: float
    evaluations: int
    method: str


class _BudgetExhausted(Exception):
    """Internal: unwinds the scipy solver once the budget is spent."""


class _CountingObjective:
    """Wraps the raw objective with budget enforcement, finite-value
    sanitization, and best-evaluated-point tracking."""

    def __init__(self, fn: Callable[[np.ndarray], float], budget: int):
        self.fn = fn
        self.budget = budget
        self.count = 0
        self.best_point: np.ndarray | None = None
        self.best_value = np.inf

    def __call__(self, theta: np.ndarray) -> float:
        if self.count >= self.budget:
            raise _BudgetExhausted
        self.count += 1
        value = float(self.fn(np.asarray(theta, dtype=float)))
        if not np.isfinite(value):
            value = np.inf
        if value < self.best_value:
            self.best_value = value
            self.best_point = np.array(theta, dtype=float)
        return value


def _solve_local_gradient(
    obj: _CountingObjective, domain: Domain, start: np.ndarray
) -> None:
    """Projected steepest descent with central-difference gradients.

    The step length adapts multiplicatively: grow on acceptance, shrink on
    rejection. Every probe and trial counts against the budget, which is
    what makes this an honest like-for-like comparison.
    """
    h = GRADIENT_PROBE_FRACTION * domain.width
    x = domain.clip(start)
    fx = obj(x)
    alpha = INITIAL_STEP_FRACTION * domain.diagonal
    min_alpha = MIN_STEP_FRACTION * domain.diagonal
    while True:
        grad = np.zeros(domain.dim)
        for i in range(domain.dim):
            e = np.zeros(domain.dim)
            e[i] = h[i]
            grad[i] = (obj(domain.clip(x + e)) - obj(domain.clip(x - e))) / (
                2.0 * h[i]
            )
        norm = np.linalg.norm(grad)
        if norm == 0.0 or not np.isfinite(norm):
            return
        direction = grad / norm
        while True:
            trial = domain.clip(x - alpha * direction)
            ft = obj(trial)
            if ft < fx:
                x, fx = trial, ft
                alpha *= STEP_GROWTH
                break
            alpha *= STEP_SHRINK
            if alpha < min_alpha:
                return


def _solve_simplex(
    obj: _CountingObjective, domain: Domain, start: np.ndarray
) -> None:
    bounds = list(zip(domain.lower, domain.upper))
    minimize(
        obj,
        domain.clip(start),
        method="Nelder-Mead",
        bounds=bounds,
        options={"maxfev": obj.budget, "xatol": 1e-10, "fatol": 1e-12},
    )


def solve_baseline(
    fn: Callable[[np.ndarray], float], domain: Domain, cfg: BaselineConfig
) -> BaselineResult:
    """Minimize fn over the domain with the configured local method.

    Returns the best point among those actually evaluated; since the start
    point is always evaluated first, the result never regresses past the
    starting value (on a deterministic objective).
    """
    start = (
        domain.clip(cfg.start)
        if cfg.start is not None
        else 0.5 * (domain.lower + domain.upper)
    )
    obj = _CountingObjective(fn, cfg.budget)
    try:
        if cfg.method == "local-gradient":
            _solve_local_gradient(obj, domain, start)
        else:
            _solve_simplex(obj, domain, start)
    except _BudgetExhausted:
        pass
    if obj.best_point is None:  # budget 0 handled by config; defensive
        return BaselineResult(start, np.inf, obj.count, cfg.method)
    return BaselineResult(obj.best_point, obj.best_value, obj.count, cfg.method)
