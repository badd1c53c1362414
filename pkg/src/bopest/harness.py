"""Experiment runner: scenario configs, seeded end-to-end runs, metric
computation, and artifact emission.

Artifacts written to the output directory:

  trajectory.csv  time-indexed states / references / controls / active
                  parameters, one block per method (leading ``method``
                  column)
  bo_trace.csv    per-evaluation record of every surrogate episode (seed
                  draws and proposals)
  metrics.json    the fully resolved config plus per-axis tracking MSE per
                  method, over the full span and over the window starting
                  at the first trigger
  table1.csv      per-instant, per-method estimate vs. schedule truth
  timings.json    wall-clock measurements

Every value in the CSV/JSON artifacts is written with round-trip float
formatting and fixed ordering, so identical configs and seeds reproduce
the first four files byte for byte. Wall-clock times are inherently
unrepeatable, which is why they are quarantined in timings.json instead
of being columns of the deterministic files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .acquisition import (
    AcquisitionConfig,
    BoState,
    propose_next,
    update_incumbent,
)
from .dynamics import (
    PendulumGains,
    PendulumReference,
    PendulumSchedule,
    QuadrotorGains,
    QuadrotorParams,
    QuadrotorSchedule,
    SinusoidReference,
)
from .estimator import (
    EstimatorConfig,
    EstimationTrace,
    PendulumSystem,
    QuadrotorSystem,
    supervise,
)
from .gp import Domain, GpModel

SCENARIOS = ("bo-demo-1d", "pendulum", "quadrotor")
ESTIMATION_METHODS = ("bo", "local-gradient", "simplex")

# (6x-2)^2 sin(12x-4) on [0, 1]: a shallow local minimum near 0.1426 and
# the global one at the frozen value below (dense grid + golden-section
# refinement of the analytic expression).
DEMO_MINIMIZER = 0.7572487572673468
DEMO_MINIMUM = -6.020740055767083


def demo_objective(x: float) -> float:
    x = float(x)
    return (6.0 * x - 2.0) ** 2 * math.sin(12.0 * x - 4.0)


class ConfigError(ValueError):
    """The config file failed validation before any simulation started."""


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

# Per-scenario default trees. A config file may override any subset; unknown
# keys are rejected so typos fail loudly instead of silently using defaults.
_COMMON_DEFAULTS: dict = {
    "seed": None,  # required; no unseeded runs
    "out_dir": None,
    "dt": 0.005,
    "integrator": "euler",
    "methods": ["nominal", "bo", "local-gradient", "simplex"],
    "noise": {"sigma_x": None, "sigma_omega": 1e-3},
    "estimator": {
        "tau_e": None,
        "n_init": 5,
        "n_iterations": 30,
        "refractory": 0.5,
        "commit_rule": "episode_replay",
    },
    "domain": {"lower": None, "upper": None},
}

_SCENARIO_DEFAULTS: dict[str, dict] = {
    "bo-demo-1d": {
        "seed": None,
        "out_dir": None,
        "n_seed_points": 3,
        "budget": 10,
    },
    "pendulum": {
        **_COMMON_DEFAULTS,
        "t_span": [0.0, 8.0],
        "report_instants": [1.5, 5.0, 8.0],
        "noise": {"sigma_x": 1e-3, "sigma_omega": 1e-3},
        "estimator": {**_COMMON_DEFAULTS["estimator"], "tau_e": 0.01},
        "domain": {"lower": [0.1, 0.1], "upper": [5.0, 3.0]},
        "plant": {
            "mass_before": 1.75,
            "length_before": 0.75,
            "mass_after": 4.271,
            "length_after": 0.981,
            "t_jump": 3.0,
            "damping": 0.1,
            "gravity": 9.81,
            "state0": [0.0, 0.0],
            "reference_target": math.pi / 3.0,
        },
        "gains": {"kp": 16.0, "kd": 8.0},
    },
    "quadrotor": {
        **_COMMON_DEFAULTS,
        "t_span": [0.0, 16.0],
        "report_instants": [1.5, 5.0, 8.0, 11.0, 14.0],
        "noise": {"sigma_x": 3.2e-3 / math.sqrt(6.0), "sigma_omega": 1e-3},
        "estimator": {**_COMMON_DEFAULTS["estimator"], "tau_e": 0.05},
        "domain": {
            "lower": [0.5, 0.5, 0.5, 0.5],
            "upper": [3.0, 10.0, 10.0, 10.0],
        },
        "plant": {
            "mass": 1.25,
            "inertia": [1.1, 1.1, 2.2],
            "gravity": 9.81,
            "offset": [0.2, 0.2, 0.2],
            "reference": {
                "amplitudes": [4.0, 5.0, 2.0],
                "frequencies": [0.8, 0.4, 0.4],
                "center": [0.0, 0.0, 0.0],
            },
        },
        "gains": {
            "kr": [5.0, 5.0, 5.0],
            "kv": [0.5, 0.5, 2.0],
            "kR": [30.0, 30.0, 30.0],
            "komega": [5.0, 10.0, 20.0],
        },
    },
}


def _merge(defaults: dict, override: dict, path: str = "") -> dict:
    out = dict(defaults)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict) and defaults[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a mapping")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved scenario description (defaults merged, validated)."""

    scenario: str
    resolved: dict = field(repr=False)

    def __getitem__(self, key):
        return self.resolved[key]

    @property
    def seed(self) -> int:
        return int(self.resolved["seed"])

    @property
    def out_dir(self) -> str | None:
        return self.resolved["out_dir"]

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        scenario = raw.get("scenario")
        if scenario not in SCENARIOS:
            raise ConfigError(
                f"scenario must be one of {SCENARIOS}, got {scenario!r}"
            )
        body = {k: v for k, v in raw.items() if k != "scenario"}
        resolved = _merge(_SCENARIO_DEFAULTS[scenario], body)
        _validate(scenario, resolved)
        return ExperimentConfig(scenario=scenario, resolved=resolved)

    def override(self, **kw) -> "ExperimentConfig":
        """CLI-level overrides (seed, out_dir, integrator, methods, ...)."""
        resolved = dict(self.resolved)
        for key, value in kw.items():
            if value is None:
                continue
            if key not in resolved:
                raise ConfigError(f"unknown override: {key}")
            resolved[key] = value
        _validate(self.scenario, resolved)
        return ExperimentConfig(scenario=self.scenario, resolved=resolved)


def _validate(scenario: str, cfg: dict) -> None:
    if cfg.get("seed") is None:
        raise ConfigError("seed is required (no unseeded runs)")
    if int(cfg["seed"]) < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if scenario == "bo-demo-1d":
        if int(cfg["n_seed_points"]) < 1 or int(cfg["budget"]) < 1:
            raise ConfigError("n_seed_points and budget must be >= 1")
        return
    if cfg["integrator"] not in ("euler", "rk4"):
        raise ConfigError("integrator must be 'euler' or 'rk4'")
    if float(cfg["dt"]) <= 0.0:
        raise ConfigError("dt must be positive")
    t0, tf = (float(v) for v in cfg["t_span"])
    if not tf > t0:
        raise ConfigError("t_span must satisfy t0 < tf")
    known = ("nominal",) + ESTIMATION_METHODS
    for m in cfg["methods"]:
        if m not in known:
            raise ConfigError(f"unknown method {m!r}")
    if len(set(cfg["methods"])) != len(cfg["methods"]):
        raise ConfigError("methods must not repeat")
    lower, upper = cfg["domain"]["lower"], cfg["domain"]["upper"]
    try:
        Domain(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    except ValueError as err:
        raise ConfigError(f"domain: {err}") from err
    for t in cfg["report_instants"]:
        if not t0 <= float(t) <= tf:
            raise ConfigError(f"report instant {t} outside t_span")
    est = cfg["estimator"]
    if float(est["tau_e"]) <= 0.0:
        raise ConfigError("estimator.tau_e must be positive")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as f:
        raw = yaml.safe_load(f)
    return ExperimentConfig.from_dict(raw)


# --------------------------------------------------------------------------
# Scenario assembly
# --------------------------------------------------------------------------


def _build_system(cfg: ExperimentConfig):
    r = cfg.resolved
    if cfg.scenario == "pendulum":
        p = r["plant"]
        schedule = PendulumSchedule(
            mass_before=float(p["mass_before"]),
            length_before=float(p["length_before"]),
            mass_after=float(p["mass_after"]),
            length_after=float(p["length_after"]),
            t_jump=float(p["t_jump"]),
            damping=float(p["damping"]),
            gravity=float(p["gravity"]),
        )
        return PendulumSystem(
            schedule=schedule,
            reference=PendulumReference(target=float(p["reference_target"])),
            gains=PendulumGains(kp=float(r["gains"]["kp"]), kd=float(r["gains"]["kd"])),
            dt=float(r["dt"]),
            integrator=r["integrator"],
            sigma_x=float(r["noise"]["sigma_x"]),
            state0=tuple(float(v) for v in p["state0"]),
        )
    p = r["plant"]
    nominal = QuadrotorParams(
        float(p["mass"]),
        np.asarray(p["inertia"], dtype=float),
        float(p["gravity"]),
        np.asarray(p["offset"], dtype=float),
    )
    ref = p["reference"]
    return QuadrotorSystem(
        schedule=QuadrotorSchedule(nominal=nominal),
        reference=SinusoidReference(
            amplitudes=np.asarray(ref["amplitudes"], dtype=float),
            frequencies=np.asarray(ref["frequencies"], dtype=float),
            center=np.asarray(ref["center"], dtype=float),
        ),
        gains=QuadrotorGains(
            kr=np.asarray(r["gains"]["kr"], dtype=float),
            kv=np.asarray(r["gains"]["kv"], dtype=float),
            kR=np.asarray(r["gains"]["kR"], dtype=float),
            komega=np.asarray(r["gains"]["komega"], dtype=float),
        ),
        dt=float(r["dt"]),
        integrator=r["integrator"],
        sigma_x=float(r["noise"]["sigma_x"]),
    )


def _estimator_config(cfg: ExperimentConfig) -> EstimatorConfig:
    r = cfg.resolved
    est = r["estimator"]
    return EstimatorConfig(
        domain=Domain(
            np.asarray(r["domain"]["lower"], dtype=float),
            np.asarray(r["domain"]["upper"], dtype=float),
        ),
        tau_e=float(est["tau_e"]),
        sigma_omega=float(r["noise"]["sigma_omega"]),
        n_init=int(est["n_init"]),
        n_iterations=int(est["n_iterations"]),
        refractory=float(est["refractory"]),
        rng_seed=cfg.seed,
        commit_rule=est["commit_rule"],
        acquisition=AcquisitionConfig(rng_seed=cfg.seed),
    )


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

_AXIS_COLUMNS = {
    "angle": ("angle", "ref_angle"),
    "x": ("px", "ref_x"),
    "y": ("py", "ref_y"),
    "z": ("pz", "ref_z"),
}


def compute_mse(rows: list[dict], axis: str, window: tuple[float, float]) -> float:
    """Mean squared tracking error for one axis over a time window.

    Rows may arrive in any order; they are sorted by time first, so the
    result depends only on the (t, value) set.
    """
    if axis not in _AXIS_COLUMNS:
        raise ValueError(f"axis must be one of {sorted(_AXIS_COLUMNS)}")
    lo, hi = window
    if not hi > lo:
        raise ValueError("window must satisfy lo < hi")
    col, ref_col = _AXIS_COLUMNS[axis]
    picked = sorted(
        (r[col] - r[ref_col]) ** 2
        for r in rows
        if lo <= r["t"] <= hi
    )
    if not picked:
        raise ValueError("window contains no samples")
    return float(np.mean(picked))


def _axes_for(scenario: str) -> tuple[str, ...]:
    return ("angle",) if scenario == "pendulum" else ("x", "y", "z")


def estimate_at(trace: EstimationTrace, t: float) -> np.ndarray | None:
    """The committed estimate active at time t (episodes still running at t
    have not committed yet and do not count)."""
    done = [ep for ep in trace.episodes if ep.t_end <= t]
    return done[-1].theta_committed if done else None


def table_one_report(
    traces: dict[str, EstimationTrace],
    truth_fn,
    instants: list[float],
    theta_names: tuple[str, ...],
) -> list[dict]:
    """Per-instant, per-method comparison of the active estimate against the
    schedule truth. Mass error is the first coordinate's absolute error;
    inertial error is the Euclidean norm over the remaining coordinates."""
    out = []
    for t in instants:
        truth = np.asarray(truth_fn(t), dtype=float)
        for method, trace in traces.items():
            row = {"instant": float(t), "method": method}
            for name, value in zip(theta_names, truth):
                row[f"true_{name}"] = float(value)
            est = estimate_at(trace, t)
            if est is None:
                row["status"] = "no-episode"
                for name in theta_names:
                    row[f"est_{name}"] = ""
                row["mass_error"] = ""
                row["inertial_error"] = ""
            else:
                row["status"] = "ok"
                for name, value in zip(theta_names, est):
                    row[f"est_{name}"] = float(value)
                row["mass_error"] = float(abs(est[0] - truth[0]))
                row["inertial_error"] = float(
                    np.linalg.norm(est[1:] - truth[1:])
                )
            out.append(row)
    return out


@dataclass
class MetricsReport:
    scenario: str
    seed: int
    mse_full: dict[str, dict[str, float]]
    mse_post_trigger: dict[str, dict[str, float]] | None
    post_window: tuple[float, float] | None
    table: list[dict]
    mean_proposal_wall: dict[str, float]
    diverged: dict[str, bool]
    demo: dict | None = None

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "mse_full": self.mse_full,
            "mse_post_trigger": self.mse_post_trigger,
            "post_window": list(self.post_window) if self.post_window else None,
            "table": self.table,
            "diverged": self.diverged,
            "demo": self.demo,
        }


# --------------------------------------------------------------------------
# Artifact writers
# --------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _config_echo(cfg: ExperimentConfig) -> dict:
    """The experiment identity embedded in artifacts: everything except the
    delivery location, so equal configs produce equal files anywhere."""
    return {
        "scenario": cfg.scenario,
        **{k: v for k, v in cfg.resolved.items() if k != "out_dir"},
    }


def _config_stamp(cfg: ExperimentConfig) -> str:
    """Two comment lines making every CSV self-describing: a short identity
    line with a config digest, then the full resolved config as JSON."""
    canon = json.dumps(_config_echo(cfg), sort_keys=True, default=str)
    digest = hashlib.sha256(canon.encode()).hexdigest()[:16]
    return (
        f"scenario={cfg.scenario} seed={cfg.seed} config_sha256={digest}\n"
        f"config={canon}"
    )


def write_csv(path: Path, fieldnames: list[str], rows: list[dict], stamp: str) -> None:
    with open(path, "w", newline="") as f:
        for line in stamp.splitlines():
            f.write(f"# {line}\n")
        writer = csv.writer(f)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(name, "")) for name in fieldnames])


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def _trace_rows(trace: EstimationTrace, dim: int) -> list[dict]:
    rows = []
    for s in trace.seed_evaluations:
        row = {
            "episode": s.episode,
            "phase": "seed",
            "index": s.index,
            "t": s.time,
            "residual": s.residual,
            "ei": "",
            "fallback": "",
            "incumbent_value": "",
        }
        for i in range(dim):
            row[f"theta_{i}"] = s.theta[i]
            row[f"incumbent_{i}"] = ""
        rows.append(row)
    for r in trace.iterations:
        row = {
            "episode": r.episode,
            "phase": "propose",
            "index": r.iteration,
            "t": r.time,
            "residual": r.residual,
            "ei": r.ei,
            "fallback": int(r.fallback),
            "incumbent_value": r.incumbent_value,
        }
        for i in range(dim):
            row[f"theta_{i}"] = r.theta[i]
            row[f"incumbent_{i}"] = r.incumbent_theta[i]
        rows.append(row)
    rows.sort(key=lambda row: (row["episode"], row["phase"] != "seed", row["index"]))
    return rows


# --------------------------------------------------------------------------
# Runners
# --------------------------------------------------------------------------


@dataclass
class Demo1dResult:
    xs: list[float]
    ys: list[float]
    incumbents: list[float]
    proposals_to_target: int | None  # EI proposals until |x - x*| <= 0.02

    @property
    def gap(self) -> float:
        return abs(self.incumbents[-1] - DEMO_MINIMIZER)


def run_demo_1d(seed: int, n_seed_points: int = 3, budget: int = 10) -> Demo1dResult:
    """The 1-D surrogate-search demo on the two-minimum test function."""
    domain = Domain(np.array([0.0]), np.array([1.0]))
    model = GpModel.create(domain, fit_seed=seed)
    state = BoState()
    # A small exploration margin keeps the search from camping on the
    # shallow decoy basin when the seed draws all land near it.
    acq = AcquisitionConfig(rng_seed=seed, xi=0.05)
    rng = np.random.default_rng([seed, 101])
    xs: list[float] = []
    ys: list[float] = []
    incumbents: list[float] = []
    reached: int | None = None

    def observe(x: np.ndarray):
        nonlocal model, state
        y = demo_objective(float(x[0]))
        model = model.with_observation(x, y)
        state = update_incumbent(state, x, y)
        xs.append(float(x[0]))
        ys.append(y)
        incumbents.append(float(state.incumbent.point[0]))

    for x in domain.sample(rng, n_seed_points):
        observe(x)
    for i in range(budget):
        prop = propose_next(model, state, acq)
        observe(prop.point)
        if reached is None and abs(incumbents[-1] - DEMO_MINIMIZER) <= 0.02:
            reached = i + 1
    return Demo1dResult(xs, ys, incumbents, reached)


def _run_demo_scenario(cfg: ExperimentConfig) -> MetricsReport:
    result = run_demo_1d(
        cfg.seed,
        int(cfg.resolved["n_seed_points"]),
        int(cfg.resolved["budget"]),
    )
    table = [
        {
            "instant": "",
            "method": "bo",
            "status": "ok",
            "true_x": DEMO_MINIMIZER,
            "est_x": result.incumbents[-1],
            "mass_error": "",
            "inertial_error": "",
        }
    ]
    report = MetricsReport(
        scenario=cfg.scenario,
        seed=cfg.seed,
        mse_full={"bo": {"gap": result.gap}},
        mse_post_trigger=None,
        post_window=None,
        table=table,
        mean_proposal_wall={},
        diverged={"bo": False},
        demo={
            "minimizer": DEMO_MINIMIZER,
            "minimum": DEMO_MINIMUM,
            "final_incumbent": result.incumbents[-1],
            "gap": result.gap,
            "proposals_to_target": result.proposals_to_target,
        },
    )
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stamp = _config_stamp(cfg)
        rows = [
            {
                "evaluation": i,
                "x": x,
                "value": y,
                "incumbent_x": inc,
            }
            for i, (x, y, inc) in enumerate(
                zip(result.xs, result.ys, result.incumbents)
            )
        ]
        write_csv(out / "bo_trace.csv", ["evaluation", "x", "value", "incumbent_x"], rows, stamp)
        write_csv(
            out / "trajectory.csv",
            ["evaluation", "x", "value", "incumbent_x"],
            rows,
            stamp,
        )
        write_csv(
            out / "table1.csv",
            ["instant", "method", "status", "true_x", "est_x", "mass_error", "inertial_error"],
            table,
            stamp,
        )
        payload = {
            "config": _config_echo(cfg),
            "metrics": report.as_dict(),
        }
        write_json(out / "metrics.json", payload)
        write_json(
            out / "timings.json",
            {"config": _config_echo(cfg), "note": "demo scenario records no timings"},
        )
    return report


def run_scenario(cfg: ExperimentConfig) -> MetricsReport:
    """Execute every configured method and emit metrics plus artifacts."""
    if cfg.scenario == "bo-demo-1d":
        return _run_demo_scenario(cfg)

    r = cfg.resolved
    t0, tf = (float(v) for v in r["t_span"])
    axes = _axes_for(cfg.scenario)
    est_cfg = _estimator_config(cfg)

    traj_rows: list[dict] = []
    traces: dict[str, EstimationTrace] = {}
    diverged: dict[str, bool] = {}
    walls: dict[str, float] = {}
    theta_names = None
    truth_fn = None

    for method in r["methods"]:
        system = _build_system(cfg)
        theta_names = system.theta_names
        truth_fn = system.theta_true
        w0 = time.perf_counter()
        trace, rows = supervise(system, est_cfg, t0, tf, method=method)
        walls[method] = time.perf_counter() - w0
        traces[method] = trace
        diverged[method] = any(ep.diverged for ep in trace.episodes)
        for row in rows:
            traj_rows.append({"method": method, **row})

    mse_full = {
        m: {a: compute_mse([x for x in traj_rows if x["method"] == m], a, (t0, tf)) for a in axes}
        for m in r["methods"]
    }

    mse_post = None
    post_window = None
    bo_trace = traces.get("bo")
    if bo_trace is not None and bo_trace.episodes:
        first = bo_trace.episodes[0].t_trigger
        if first < tf:
            post_window = (first, tf)
            mse_post = {
                m: {
                    a: compute_mse(
                        [x for x in traj_rows if x["method"] == m], a, post_window
                    )
                    for a in axes
                }
                for m in r["methods"]
            }

    est_traces = {m: traces[m] for m in r["methods"] if m != "nominal"}
    table = (
        table_one_report(est_traces, truth_fn, [float(t) for t in r["report_instants"]], theta_names)
        if est_traces
        else []
    )

    mean_walls = {}
    for method, trace in est_traces.items():
        if method == "bo":
            per = [it.wall_time for it in trace.iterations]
        else:
            per = [ep.mean_wall_time for ep in trace.episodes]
        mean_walls[method] = float(np.mean(per)) if per else 0.0

    report = MetricsReport(
        scenario=cfg.scenario,
        seed=cfg.seed,
        mse_full=mse_full,
        mse_post_trigger=mse_post,
        post_window=post_window,
        table=table,
        mean_proposal_wall=mean_walls,
        diverged=diverged,
    )

    if cfg.out_dir:
        _write_artifacts(cfg, report, traj_rows, traces, walls, theta_names)
    return report


def _write_artifacts(cfg, report, traj_rows, traces, walls, theta_names):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = _config_stamp(cfg)

    first_cols = [k for k in traj_rows[0] if k != "method"]
    write_csv(out / "trajectory.csv", ["method"] + first_cols, traj_rows, stamp)

    dim = len(theta_names)
    bo_rows = _trace_rows(traces["bo"], dim) if "bo" in traces else []
    trace_cols = (
        ["episode", "phase", "index", "t"]
        + [f"theta_{i}" for i in range(dim)]
        + ["residual"]
        + [f"incumbent_{i}" for i in range(dim)]
        + ["incumbent_value", "ei", "fallback"]
    )
    write_csv(out / "bo_trace.csv", trace_cols, bo_rows, stamp)

    table_cols = (
        ["instant", "method", "status"]
        + [f"true_{n}" for n in theta_names]
        + [f"est_{n}" for n in theta_names]
        + ["mass_error", "inertial_error"]
    )
    write_csv(out / "table1.csv", table_cols, report.table, stamp)

    write_json(
        out / "metrics.json",
        {"config": _config_echo(cfg), "metrics": report.as_dict()},
    )
    write_json(
        out / "timings.json",
        {
            "config": _config_echo(cfg),
            "total_wall_seconds": walls,
            "mean_proposal_wall_seconds": report.mean_proposal_wall,
        },
    )
