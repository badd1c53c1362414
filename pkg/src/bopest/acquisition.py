"""Expected-improvement acquisition over a GP surrogate.

Minimization convention throughout: the incumbent is the lowest value seen
so far, improvement at a query is (incumbent - xi - posterior mean), and
the proposal maximizes closed-form EI. Proposals are found with a seeded
uniform candidate pool followed by coordinate-wise golden-section
refinement of the best pool points, batched across refinement starts so
the GP posterior is only ever evaluated on arrays.

All randomness is drawn from np.random.default_rng([seed, iteration]), so
a proposal is a pure function of (model, state, config).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from bopest.gp import Domain, GpModel

# Below this posterior standard deviation the improvement density is
# treated as a point mass: EI is exactly zero.
EI_SIGMA_FLOOR = 1e-12

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0

INCUMBENT_RULES = ("best_observation", "posterior_mean")


class Incumbent(NamedTuple):
    point: np.ndarray
    value: float


class Proposal(NamedTuple):
    point: np.ndarray
    ei: float
    fallback: bool


@dataclass(frozen=True)
class AcquisitionConfig:
    """Knobs for the EI proposal search.

    refine_half_width is the local golden-section bracket half-width as a
    fraction of the domain width per axis; refinement only ever accepts a
    coordinate move that increases EI, so it cannot underperform the pool.
    """

    rng_seed: int = 0
    pool_size: int = 1024
    refine_top: int = 8
    refine_sweeps: int = 2
    refine_iters: int = 20
    refine_half_width: float = 0.1
    xi: float = 0.0
    incumbent_rule: str = "best_observation"

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if self.refine_top < 0 or self.refine_sweeps < 0 or self.refine_iters < 0:
            raise ValueError("refinement counts must be nonnegative")
        if not 0.0 < self.refine_half_width <= 1.0:
            raise ValueError("refine_half_width must be in (0, 1]")
        if self.xi < 0.0:
            raise ValueError("xi must be nonnegative")
        if self.incumbent_rule not in INCUMBENT_RULES:
            raise ValueError(f"incumbent_rule must be one of {INCUMBENT_RULES}")


@dataclass(frozen=True)
class BoState:
    """Observation counter plus the best (point, value) seen so far."""

    iteration: int = 0
    incumbent: Incumbent | None = None


def update_incumbent(state: BoState, point: np.ndarray, value: float) -> BoState:
    """Fold one observation into the state.

    The incumbent is replaced only on strict improvement, so the earliest
    of tied observations is kept. The iteration counter always advances
    (it keys the proposal RNG stream). Non-finite observations are
    rejected with a warning and leave the state unchanged.
    """
    value = float(value)
    if not np.isfinite(value):
        warnings.warn("rejected non-finite observation; state unchanged")
        return state
    incumbent = state.incumbent
    if incumbent is None or value < incumbent.value:
        incumbent = Incumbent(np.array(point, dtype=float, copy=True), value)
    return replace(state, iteration=state.iteration + 1, incumbent=incumbent)


def _phi(z: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)


def expected_improvement_batch(
    mean: np.ndarray,
    var: np.ndarray,
    incumbent_value: float,
    xi: float = 0.0,
) -> np.ndarray:
    """Closed-form EI for minimization, elementwise over (mean, var)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    var = np.atleast_1d(np.asarray(var, dtype=float))
    if mean.shape != var.shape:
        raise ValueError("mean and var must have the same shape")
    if np.any(var < -1e-9):
        raise ValueError("negative posterior variance")
    sigma = np.sqrt(np.maximum(var, 0.0))
    improvement = incumbent_value - xi - mean
    out = np.zeros_like(mean)
    active = sigma >= EI_SIGMA_FLOOR
    z = improvement[active] / sigma[active]
    out[active] = improvement[active] * ndtr(z) + sigma[active] * _phi(z)
    return np.maximum(out, 0.0)


def expected_improvement(
    mean: float, var: float, incumbent_value: float, xi: float = 0.0
) -> float:
    return float(expected_improvement_batch([mean], [var], incumbent_value, xi)[0])


def _incumbent_value(model: GpModel, state: BoState, cfg: AcquisitionConfig) -> float:
    if cfg.incumbent_rule == "posterior_mean":
        if model.n == 0:
            raise ValueError("posterior_mean incumbent requires observations")
        means, _ = model.posterior_batch(model.X)
        return float(means.min())
    if state.incumbent is None:
        raise ValueError("no incumbent: fold in an observation before proposing")
    return state.incumbent.value


def _with_coord(points: np.ndarray, coord: int, values: np.ndarray) -> np.ndarray:
    out = points.copy()
    out[:, coord] = values
    return out


def _golden_refine(ei_fn, points, ei_vals, domain: Domain, cfg: AcquisitionConfig):
    """Coordinate-wise golden-section ascent of EI, batched over rows.

    Each coordinate is searched inside a local bracket around the current
    point; the move is accepted per-row only if it increases EI.
    """
    points = points.copy()
    ei_vals = ei_vals.copy()
    half = cfg.refine_half_width * domain.width
    for _ in range(cfg.refine_sweeps):
        for coord in range(domain.dim):
            a = np.maximum(points[:, coord] - half[coord], domain.lower[coord])
            b = np.minimum(points[:, coord] + half[coord], domain.upper[coord])
            c = b - INV_PHI * (b - a)
            d = a + INV_PHI * (b - a)
            fc = ei_fn(_with_coord(points, coord, c))
            fd = ei_fn(_with_coord(points, coord, d))
            for _ in range(cfg.refine_iters):
                keep_right = fc < fd  # maximum lies in [c, b]
                a = np.where(keep_right, c, a)
                b = np.where(keep_right, b, d)
                c = b - INV_PHI * (b - a)
                d = a + INV_PHI * (b - a)
                fc = ei_fn(_with_coord(points, coord, c))
                fd = ei_fn(_with_coord(points, coord, d))
            mid = 0.5 * (a + b)
            fmid = ei_fn(_with_coord(points, coord, mid))
            better = fmid > ei_vals
            points[better, coord] = mid[better]
            ei_vals = np.where(better, fmid, ei_vals)
    return points, ei_vals


def minimize_posterior_mean(
    model: GpModel,
    cfg: AcquisitionConfig,
    stream: int = 0,
    anchor: np.ndarray | None = None,
    anchor_tol: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Surrogate-best point: minimize the posterior mean over the domain.

    Uses the same seeded pool + local-refinement search as the proposal
    step (negated scores), with the observed inputs added to the pool so
    the result never loses to a point the model has actually visited.
    Deterministic in (model, config, stream).

    With an `anchor`, the minimizer is chosen differently: among all pool
    points whose posterior mean lies within `anchor_tol` of the pool
    minimum — the set the model cannot tell apart at its own noise level —
    return the one closest to the anchor (normalized coordinates). When the
    near-minimal set is a ridge or curve rather than a point, this picks
    the explanation that changes the anchor the least instead of an
    arbitrary spot along the ridge.
    """
    domain = model.domain
    rng = np.random.default_rng([cfg.rng_seed, int(stream)])
    pool = domain.sample(rng, cfg.pool_size)
    if model.n:
        pool = np.vstack([pool, model.X])
    if anchor is not None:
        pool = np.vstack([pool, domain.clip(np.asarray(anchor, dtype=float))])

    def score_fn(P: np.ndarray) -> np.ndarray:
        mean, _ = model.posterior_batch(P)
        return -mean

    scores = score_fn(pool)

    if anchor is not None:
        mean = -scores
        near = mean <= mean.min() + max(anchor_tol, 0.0)
        cand = pool[near]
        d = np.linalg.norm(
            domain.normalize(cand) - domain.normalize(np.asarray(anchor, dtype=float)),
            axis=1,
        )
        i = int(np.argmin(d))
        return domain.clip(cand[i]), float(mean[near][i])

    order = np.argsort(-scores, kind="stable")
    k = max(min(cfg.refine_top, pool.shape[0]), 1)
    candidates = pool[order[:k]]
    vals = scores[order[:k]]
    if cfg.refine_top > 0:
        candidates, vals = _golden_refine(score_fn, candidates, vals, domain, cfg)
    best = int(np.argmax(vals))
    return domain.clip(candidates[best]), -float(vals[best])


def propose_next(model: GpModel, state: BoState, cfg: AcquisitionConfig) -> Proposal:
    """Next query point by EI maximization over the model's domain.

    Deterministic in (model, state, config). When EI vanishes everywhere
    (e.g. the posterior has collapsed), falls back to a seeded uniform
    draw and flags it.
    """
    domain = model.domain
    incumbent_value = _incumbent_value(model, state, cfg)
    rng = np.random.default_rng([cfg.rng_seed, state.iteration])

    def ei_fn(P: np.ndarray) -> np.ndarray:
        mean, var = model.posterior_batch(P)
        return expected_improvement_batch(mean, var, incumbent_value, cfg.xi)

    pool = domain.sample(rng, cfg.pool_size)
    ei_pool = ei_fn(pool)
    # stable sort keeps the lowest pool index first among exact EI ties
    order = np.argsort(-ei_pool, kind="stable")
    k = max(min(cfg.refine_top, cfg.pool_size), 1)  # refine_top=0: pool best only
    candidates = pool[order[:k]]
    ei_vals = ei_pool[order[:k]]

    if cfg.refine_top > 0 and ei_vals[0] > 0.0:
        candidates, ei_vals = _golden_refine(ei_fn, candidates, ei_vals, domain, cfg)

    if ei_vals.max() <= 0.0:
        point = domain.sample(rng, 1)[0]
        return Proposal(point=point, ei=0.0, fallback=True)

    best = int(np.argmax(ei_vals))  # first maximum: lowest-ranked candidate
    return Proposal(
        point=domain.clip(candidates[best]), ei=float(ei_vals[best]), fallback=False
    )
