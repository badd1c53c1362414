"""Online parameter estimation through residual-surface search.

The supervision loop runs the plant under its controller, watches the
tracking error, and when it crosses the trigger threshold opens an
estimation episode: build a residual objective from the observed noisy
derivatives, search it (surrogate-guided by default, or with a local
baseline solver), reconfigure the controller with each proposal as it is
made, and commit the best estimate at the end.

Plant-specific glue lives in the two System classes; everything above them
is plant-agnostic and keyed only by the parameter domain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    BoState,
    minimize_posterior_mean,
    propose_next,
    update_incumbent,
)
from .baselines import BaselineConfig, solve_baseline
from .dynamics import (
    GeometricController,
    SimulationDiverged,
    PendulumGains,
    PendulumParams,
    PendulumReference,
    PendulumSchedule,
    QuadrotorGains,
    QuadrotorParams,
    QuadrotorSchedule,
    SinusoidReference,
    initial_state,
    pendulum_control,
    pendulum_deriv,
    pendulum_step,
    predicted_accel,
    predicted_derivatives,
    quadrotor_deriv,
    quadrotor_step,
)
from .gp import Domain, GpModel

METHODS = ("bo", "local-gradient", "simplex", "nominal")
COMMIT_RULES = ("episode_replay", "posterior_mean", "best_observation")

# Substream tags so every random consumer hangs off one root seed.
STREAM_MEASUREMENT = 0
STREAM_RESIDUAL = 1
STREAM_INIT = 2
STREAM_ACQUISITION = 3
STREAM_FIT = 4

# Per-channel measurement-noise std so the stacked 6-channel noise vector
# has Euclidean norm sigma bounded by 3.2e-3 in expectation-square.
QUADROTOR_SIGMA_X = 3.2e-3 / math.sqrt(6.0)
PENDULUM_SIGMA_X = 1e-3

# Episode targets are scored against a drifting snapshot sequence, so a
# fraction of their variance is snapshot drift, not signal. Flooring the
# fitted noise variance (standardized units) keeps the surrogate smooth
# instead of interpolating every sample as its own island.
GP_NOISE_FLOOR = 1e-2


class InvalidParameterError(ValueError):
    """The dynamics model returned a non-finite value at these parameters."""

    def __init__(self, theta: np.ndarray):
        self.theta = np.array(theta, dtype=float)
        super().__init__(
            f"model output is not finite at parameters {self.theta.tolist()}"
        )


@dataclass
class ResidualObjective:
    """One frozen (state, control, observation) snapshot to score candidate
    parameters against. `model_fn` maps θ to the predicted derivative
    channels; `weights` optionally rescales channels before the norm."""

    observed: np.ndarray
    model_fn: Callable[[np.ndarray], np.ndarray]
    noise_std: float = 0.0
    rng: np.random.Generator | None = None
    weights: np.ndarray | None = None


def residual(obj: ResidualObjective, theta: np.ndarray) -> float:
    """Euclidean norm of (observed - predicted) plus one observation-noise
    draw, floored at zero so the cost stays in its natural range."""
    pred = np.asarray(obj.model_fn(theta), dtype=float)
    if not np.all(np.isfinite(pred)):
        raise InvalidParameterError(theta)
    diff = obj.observed - pred
    if obj.weights is not None:
        diff = obj.weights * diff
    eps = float(np.linalg.norm(diff))
    if obj.noise_std > 0.0 and obj.rng is not None:
        eps += float(obj.rng.normal(0.0, obj.noise_std))
    return max(eps, 0.0)


def replay_score(snapshots: list[ResidualObjective], theta: np.ndarray) -> float:
    """Total squared residual of theta against every snapshot in the list.

    This is a noise-free replay of already-logged observations (no plant
    access, no fresh noise draw): the stored model closures are evaluated at
    theta and compared against the stored measurements. A parameter point
    that merely sits on one snapshot's near-zero curve scores poorly here,
    because the curve moves with the plant state while the true parameters
    stay on it throughout."""
    total = 0.0
    for snap in snapshots:
        pred = np.asarray(snap.model_fn(theta), dtype=float)
        if not np.all(np.isfinite(pred)):
            return float("inf")
        diff = snap.observed - pred
        if snap.weights is not None:
            diff = snap.weights * diff
        total += float(diff @ diff)
    return total


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for the supervision loop and its episodes."""

    domain: Domain
    tau_e: float
    sigma_omega: float = 1e-3
    n_init: int = 5
    n_iterations: int = 30
    refractory: float = 0.5
    rng_seed: int = 0
    # Each single snapshot admits a whole curve of near-zero explanations
    # (the low-excitation directions), so committing anything ranked on one
    # snapshot is a raffle along that curve. The default re-scores the
    # episode's candidates against every snapshot logged during the episode:
    # only parameters consistent with the transients too survive that.
    commit_rule: str = "episode_replay"
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)

    def __post_init__(self):
        if self.tau_e <= 0.0:
            raise ValueError("tau_e must be positive")
        if self.sigma_omega < 0.0:
            raise ValueError("sigma_omega must be nonnegative")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.refractory < 0.0:
            raise ValueError("refractory must be nonnegative")
        if self.commit_rule not in COMMIT_RULES:
            raise ValueError(f"commit_rule must be one of {COMMIT_RULES}")

    @property
    def episode_budget(self) -> int:
        return self.n_init + self.n_iterations


@dataclass
class SeedEvaluation:
    episode: int
    index: int
    time: float
    theta: np.ndarray
    residual: float


@dataclass
class IterationRecord:
    episode: int
    iteration: int
    time: float
    theta: np.ndarray
    residual: float
    incumbent_theta: np.ndarray
    incumbent_value: float
    controller_theta: np.ndarray
    ei: float
    fallback: bool
    wall_time: float


@dataclass
class EpisodeSummary:
    episode: int
    method: str
    t_trigger: float
    t_end: float
    theta_committed: np.ndarray
    theta_true: np.ndarray
    param_error: np.ndarray
    evaluations: int
    mean_wall_time: float
    diverged: bool

    @property
    def mass_error(self) -> float:
        return float(self.param_error[0])

    @property
    def inertial_error(self) -> float:
        """Norm of the non-mass coordinates' error (inertia diagonal for the
        quadrotor, length for the pendulum)."""
        return float(np.linalg.norm(self.param_error[1:]))


@dataclass
class EstimationTrace:
    method: str
    seed_evaluations: list[SeedEvaluation] = field(default_factory=list)
    iterations: list[IterationRecord] = field(default_factory=list)
    episodes: list[EpisodeSummary] = field(default_factory=list)

    @property
    def trigger_times(self) -> list[float]:
        return [ep.t_trigger for ep in self.episodes]


class PendulumSystem:
    """Actuated planar pendulum under feedback-linearizing control, with a
    mass/length jump mid-run. Estimation channel: angular acceleration."""

    theta_names = ("mass", "length")

    def __init__(
        self,
        schedule: PendulumSchedule | None = None,
        reference: PendulumReference | None = None,
        gains: PendulumGains | None = None,
        dt: float = 0.005,
        integrator: str = "euler",
        sigma_x: float = PENDULUM_SIGMA_X,
        state0: tuple[float, float] = (0.0, 0.0),
    ):
        self.schedule = schedule if schedule is not None else PendulumSchedule()
        self.reference = reference if reference is not None else PendulumReference()
        self.gains = gains if gains is not None else PendulumGains()
        self.dt = float(dt)
        self.integrator = integrator
        self.sigma_x = float(sigma_x)
        self.state = np.array(state0, dtype=float)
        nom = self.schedule.nominal
        self.theta_nominal = np.array([nom.mass, nom.length])
        self.theta_active = self.theta_nominal.copy()
        self.residual_weights = None

    def params_from(self, theta: np.ndarray) -> PendulumParams:
        return PendulumParams(
            float(theta[0]),
            float(theta[1]),
            self.schedule.damping,
            self.schedule.gravity,
        )

    def reconfigure(self, theta: np.ndarray) -> None:
        self.theta_active = np.array(theta, dtype=float)

    def control(self, t: float) -> float:
        return pendulum_control(
            self.state,
            self.reference,
            t,
            self.gains,
            self.params_from(self.theta_active),
        )

    def step(self, u: float, t: float) -> None:
        self.state = pendulum_step(
            self.state, u, self.schedule(t), self.dt, self.integrator, t
        )

    def observe(self, u: float, t: float, rng: np.random.Generator) -> np.ndarray:
        acc = pendulum_deriv(self.state, u, self.schedule(t))[1:2]
        return acc + rng.normal(0.0, self.sigma_x, size=1)

    def frozen_model(self, u: float) -> Callable[[np.ndarray], np.ndarray]:
        state = self.state.copy()
        damping, gravity = self.schedule.damping, self.schedule.gravity
        return lambda theta: predicted_accel(state, u, theta, damping, gravity)

    def tracking_error(self, t: float) -> float:
        return abs(self.reference.angle(t) - self.state[0])

    def theta_true(self, t: float) -> np.ndarray:
        p = self.schedule(t)
        return np.array([p.mass, p.length])

    def trajectory_row(self, t: float, u: float, in_episode: bool) -> dict:
        return {
            "t": t,
            "angle": float(self.state[0]),
            "rate": float(self.state[1]),
            "ref_angle": float(self.reference.angle(t)),
            "u": float(u),
            "theta_mass": float(self.theta_active[0]),
            "theta_length": float(self.theta_active[1]),
            "in_episode": int(in_episode),
        }


class QuadrotorSystem:
    """SE(3) quadrotor under the geometric tracking controller, with the
    time-varying mass/inertia schedule. Estimation channels: linear and
    angular acceleration, stacked."""

    theta_names = ("mass", "jx", "jy", "jz")

    def __init__(
        self,
        schedule: QuadrotorSchedule | None = None,
        reference: SinusoidReference | None = None,
        gains: QuadrotorGains | None = None,
        dt: float = 0.005,
        integrator: str = "euler",
        sigma_x: float = QUADROTOR_SIGMA_X,
        residual_weights: np.ndarray | None = None,
    ):
        self.schedule = schedule if schedule is not None else QuadrotorSchedule()
        self.reference = reference if reference is not None else SinusoidReference()
        self.gains = gains if gains is not None else QuadrotorGains()
        self.dt = float(dt)
        self.integrator = integrator
        self.sigma_x = float(sigma_x)
        self.controller = GeometricController(
            self.gains, self.schedule.nominal, control_period=self.dt
        )
        self.state = initial_state(self.reference)
        nom = self.schedule.nominal
        self.theta_nominal = np.concatenate([[nom.mass], nom.inertia])
        self.theta_active = self.theta_nominal.copy()
        self.residual_weights = (
            None
            if residual_weights is None
            else np.asarray(residual_weights, dtype=float)
        )

    def params_from(self, theta: np.ndarray) -> QuadrotorParams:
        nom = self.schedule.nominal
        return QuadrotorParams(
            float(theta[0]), np.array(theta[1:4]), nom.gravity, nom.offset
        )

    def reconfigure(self, theta: np.ndarray) -> None:
        self.theta_active = np.array(theta, dtype=float)
        self.controller.reconfigure(self.params_from(self.theta_active))

    def control(self, t: float) -> tuple[float, np.ndarray]:
        return self.controller(self.state, self.reference, t)

    def step(self, u: tuple[float, np.ndarray], t: float) -> None:
        F, M = u
        self.state = quadrotor_step(
            self.state, F, M, self.schedule(t), self.dt, self.integrator, t
        )

    def observe(
        self, u: tuple[float, np.ndarray], t: float, rng: np.random.Generator
    ) -> np.ndarray:
        F, M = u
        d = quadrotor_deriv(self.state, F, M, self.schedule(t))
        y = np.concatenate([d[3:6], d[15:18]])
        return y + rng.normal(0.0, self.sigma_x, size=6)

    def frozen_model(
        self, u: tuple[float, np.ndarray]
    ) -> Callable[[np.ndarray], np.ndarray]:
        F, M = u
        state = self.state  # states are replaced, never mutated in place
        gravity = self.schedule.nominal.gravity
        return lambda theta: predicted_derivatives(state, F, M, theta, gravity)

    def tracking_error(self, t: float) -> float:
        return float(
            np.linalg.norm(self.state.position - self.reference.position(t))
        )

    def theta_true(self, t: float) -> np.ndarray:
        p = self.schedule(t)
        return np.concatenate([[p.mass], p.inertia])

    def trajectory_row(
        self, t: float, u: tuple[float, np.ndarray], in_episode: bool
    ) -> dict:
        F, M = u
        pos, vel, om = self.state.position, self.state.velocity, self.state.body_rate
        rp = self.reference.position(t)
        row = {
            "t": t,
            "px": pos[0], "py": pos[1], "pz": pos[2],
            "vx": vel[0], "vy": vel[1], "vz": vel[2],
            "wx": om[0], "wy": om[1], "wz": om[2],
            "ref_x": rp[0], "ref_y": rp[1], "ref_z": rp[2],
            "thrust": float(F),
            "mx": M[0], "my": M[1], "mz": M[2],
            "theta_mass": self.theta_active[0],
            "theta_jx": self.theta_active[1],
            "theta_jy": self.theta_active[2],
            "theta_jz": self.theta_active[3],
            "in_episode": int(in_episode),
        }
        return {k: (float(v) if k != "in_episode" else v) for k, v in row.items()}


def _derived_seed(root: int, stream: int, episode: int) -> int:
    return int(
        np.random.default_rng([root, stream, episode]).integers(2**62)
    )


def _make_objective(system, cfg, t, rng_meas, rng_res) -> ResidualObjective:
    u = system.control(t)
    y = system.observe(u, t, rng_meas)
    return ResidualObjective(
        observed=y,
        model_fn=system.frozen_model(u),
        noise_std=cfg.sigma_omega,
        rng=rng_res,
        weights=system.residual_weights,
    )


def _run_bo_episode(
    system, cfg, t0, k, episode, rng_meas, rng_res, trace, rows, memory=None
) -> int:
    """One estimation episode: seed the surrogate at the trigger snapshot,
    then alternate propose / reconfigure / step / observe. Returns the step
    index after the episode; the plant advances one dt per proposal.

    `memory` is a mutable list of candidate parameter points carried across
    episodes by the supervision loop. Its entries are re-evaluated (at the
    current snapshot) as seed points: a single episode's residual often has
    a whole curve of near-zero explanations, but that curve rotates with the
    plant state between triggers, so re-reading the previous episode's best
    candidates lets this episode's own data reject the ones that only fit
    the old snapshot."""
    dt = system.dt
    t_trigger = t0 + k * dt
    rng_init = np.random.default_rng([cfg.rng_seed, STREAM_INIT, episode])
    acq_cfg = replace(
        cfg.acquisition,
        rng_seed=_derived_seed(cfg.rng_seed, STREAM_ACQUISITION, episode),
    )
    model = GpModel.create(
        cfg.domain,
        noise_init=cfg.sigma_omega if cfg.sigma_omega > 0.0 else None,
        fit_seed=_derived_seed(cfg.rng_seed, STREAM_FIT, episode),
        noise_floor=GP_NOISE_FLOOR,
    )
    state = BoState()
    theta_entry = system.theta_active.copy()

    obj = _make_objective(system, cfg, t_trigger, rng_meas, rng_res)
    snapshots = [obj]
    seeds = [cfg.domain.clip(theta_entry)]
    for cand in memory if memory is not None else []:
        if len(seeds) >= cfg.n_init - 1:
            break  # always leave at least one uniform draw
        cand = cfg.domain.clip(cand)
        if all(np.linalg.norm(cand - s) > 1e-9 for s in seeds):
            seeds.append(cand)
    while len(seeds) < cfg.n_init:
        seeds.append(cfg.domain.sample(rng_init, 1)[0])
    for i, theta in enumerate(seeds):
        eps = residual(obj, theta)
        model = model.with_observation(theta, eps)
        state = update_incumbent(state, theta, eps)
        trace.seed_evaluations.append(
            SeedEvaluation(episode, i, t_trigger, theta, eps)
        )
    evaluated = list(seeds)

    diverged = False
    walls: list[float] = []
    for i in range(cfg.n_iterations):
        t = t0 + k * dt
        w0 = time.perf_counter()
        prop = propose_next(model, state, acq_cfg)
        wall = time.perf_counter() - w0
        theta_i = prop.point
        system.reconfigure(theta_i)
        u = system.control(t)
        row = system.trajectory_row(t, u, True)
        try:
            system.step(u, t)
        except SimulationDiverged:
            diverged = True
            break
        rows.append(row)
        k += 1
        t_new = t0 + k * dt
        obj = ResidualObjective(
            observed=system.observe(u, t_new, rng_meas),
            model_fn=system.frozen_model(u),
            noise_std=cfg.sigma_omega,
            rng=rng_res,
            weights=system.residual_weights,
        )
        snapshots.append(obj)
        evaluated.append(theta_i)
        eps = residual(obj, theta_i)
        w1 = time.perf_counter()
        model = model.with_observation(theta_i, eps)
        wall += time.perf_counter() - w1
        state = update_incumbent(state, theta_i, eps)
        walls.append(wall)
        trace.iterations.append(
            IterationRecord(
                episode=episode,
                iteration=i,
                time=t_new,
                theta=theta_i,
                residual=eps,
                incumbent_theta=state.incumbent.point.copy(),
                incumbent_value=state.incumbent.value,
                controller_theta=system.theta_active.copy(),
                ei=prop.ei,
                fallback=prop.fallback,
                wall_time=wall,
            )
        )

    # Surrogate-best point; stream distinct from every proposal's (those use
    # iteration indices < episode_budget).
    surrogate_best = None
    if model.n:
        surrogate_best, _ = minimize_posterior_mean(
            model,
            replace(acq_cfg, pool_size=4 * acq_cfg.pool_size),
            stream=cfg.episode_budget + 1,
        )

    if cfg.commit_rule == "episode_replay":
        # Rank everything the episode produced — seed points, probe points,
        # the surrogate minimizer — by consistency with the full snapshot
        # log, then polish the winner on that same pooled score. Any single
        # snapshot is satisfied by a whole curve of parameters (its
        # low-excitation directions), and the search's own probing rotates
        # that curve between snapshots, so pooled consistency is what
        # separates the true parameters from the impostors on one curve.
        # The polish runs on logged data only — no plant access, no fresh
        # noise — so it sharpens the last fraction of a percent without
        # spending plant steps or trusting any single lucky draw.
        candidates = list(evaluated)
        if surrogate_best is not None:
            candidates.append(np.asarray(surrogate_best, dtype=float))
        pooled = [replay_score(snapshots, th) for th in candidates]
        order = np.argsort(pooled)
        winner = candidates[int(order[0])]
        polish = solve_baseline(
            lambda th: replay_score(snapshots, th),
            cfg.domain,
            BaselineConfig(
                method="simplex",
                budget=100 * cfg.domain.dim,
                start=winner,
            ),
        )
        committed = polish.point
        if memory is not None:
            memory.clear()
            for idx in order[1:]:
                cand = candidates[int(idx)]
                if np.linalg.norm(cand - committed) > 1e-9:
                    memory.append(np.array(cand, dtype=float))
                    break
    else:
        if cfg.commit_rule == "posterior_mean" and surrogate_best is not None:
            committed = np.asarray(surrogate_best, dtype=float)
        elif state.incumbent is not None:
            committed = state.incumbent.point
        else:
            committed = theta_entry
        if memory is not None:
            memory.clear()
            if state.incumbent is not None:
                memory.append(state.incumbent.point.copy())
            if surrogate_best is not None:
                memory.append(np.array(surrogate_best, dtype=float))
    system.reconfigure(committed)
    t_end = t0 + k * dt
    tru = system.theta_true(t_end)
    trace.episodes.append(
        EpisodeSummary(
            episode=episode,
            method="bo",
            t_trigger=t_trigger,
            t_end=t_end,
            theta_committed=np.array(committed, dtype=float),
            theta_true=tru,
            param_error=np.abs(np.array(committed) - tru),
            evaluations=model.n,
            mean_wall_time=float(np.mean(walls)) if walls else 0.0,
            diverged=diverged,
        )
    )
    return k


def _run_baseline_episode(
    system, cfg, t, episode, method, rng_meas, rng_res, trace
) -> None:
    """Baseline solvers work the trigger snapshot only: no plant stepping,
    the whole evaluation budget is spent on one frozen objective."""
    obj = _make_objective(system, cfg, t, rng_meas, rng_res)
    w0 = time.perf_counter()
    result = solve_baseline(
        lambda th: residual(obj, th),
        cfg.domain,
        BaselineConfig(
            method=method, budget=cfg.episode_budget, start=system.theta_nominal
        ),
    )
    wall = time.perf_counter() - w0
    system.reconfigure(result.point)
    tru = system.theta_true(t)
    trace.episodes.append(
        EpisodeSummary(
            episode=episode,
            method=method,
            t_trigger=t,
            t_end=t,
            theta_committed=np.array(result.point, dtype=float),
            theta_true=tru,
            param_error=np.abs(np.array(result.point) - tru),
            evaluations=result.evaluations,
            mean_wall_time=wall / max(result.evaluations, 1),
            diverged=False,
        )
    )


def supervise(
    system,
    cfg: EstimatorConfig,
    t0: float,
    tf: float,
    method: str = "bo",
) -> tuple[EstimationTrace, list[dict]]:
    """Run the closed loop over [t0, tf] and return (trace, trajectory rows).

    method selects how episodes estimate parameters; "nominal" disables
    triggering entirely (pure frozen-parameter run, same logging).
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    trace = EstimationTrace(method=method)
    rows: list[dict] = []
    rng_meas = np.random.default_rng([cfg.rng_seed, STREAM_MEASUREMENT])
    rng_res = np.random.default_rng([cfg.rng_seed, STREAM_RESIDUAL])
    dt = system.dt
    n_steps = int(round((tf - t0) / dt))
    last_end = -np.inf
    episode = 0
    k = 0
    memory: list[np.ndarray] = []
    while k < n_steps:
        t = t0 + k * dt
        # strict t > last_end keeps a zero-refractory baseline episode
        # (which consumes no plant steps) from re-triggering in place
        if (
            method != "nominal"
            and system.tracking_error(t) >= cfg.tau_e
            and t - last_end >= cfg.refractory - 1e-12
            and t > last_end
        ):
            if method == "bo":
                k = _run_bo_episode(
                    system, cfg, t0, k, episode, rng_meas, rng_res, trace, rows,
                    memory=memory,
                )
            else:
                _run_baseline_episode(
                    system, cfg, t, episode, method, rng_meas, rng_res, trace
                )
            last_end = t0 + k * dt
            episode += 1
            continue
        u = system.control(t)
        row = system.trajectory_row(t, u, False)
        system.step(u, t)
        rows.append(row)
        k += 1
    return trace, rows
