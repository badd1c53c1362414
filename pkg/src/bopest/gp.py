"""Gaussian-process regression over a bounded parameter box.

Scalar-output GP with a Matern 5/2 kernel carrying one lengthscale per
input dimension (automatic relevance determination). Predictions are
computed through a Cholesky factorization of the noisy Gram matrix; the
marginal likelihood uses the same factor. Hyperparameters are fitted by
multi-start Nelder-Mead ascent of the log marginal likelihood in
log-space.

Note on the kernel polynomial: the canonical Matern 5/2 correlation is
(1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r); the variant without the /3
is not positive definite in general and is deliberately not offered.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

SQRT5 = np.sqrt(5.0)

# Jitter escalation on Cholesky failure, as fractions of the signal variance.
# Duplicate inputs occur naturally when the acquisition re-queries near an
# incumbent, so factorization retries are part of the contract.
JITTER_START_FRACTION = 1e-10
JITTER_MAX_FRACTION = 1e-4
JITTER_GROWTH = 10.0

NOISE_VARIANCE_FLOOR = 1e-8
TARGET_STD_FLOOR = 1e-12

# Hyperparameter refit cadence: refit on every added point early on, then
# every REFIT_PERIOD-th point once the dataset is large enough that refits
# dominate prediction time.
REFIT_EVERY_BELOW = 15
REFIT_PERIOD = 5


class NumericalInstabilityError(RuntimeError):
    """Gram matrix could not be factorized even at the jitter cap."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box of admissible parameter vectors."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("domain bounds must be 1-D vectors of equal length >= 1")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("domain bounds must be finite")
        if not np.all(lower < upper):
            raise ValueError("domain requires lower[i] < upper[i] for every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.width))

    def contains(self, theta: np.ndarray, atol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(
            np.all(theta >= self.lower - atol) and np.all(theta <= self.upper + atol)
        )

    def clip(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def normalize(self, theta: np.ndarray) -> np.ndarray:
        """Map points into the unit box (kernel lengthscales live there)."""
        return (np.asarray(theta, dtype=float) - self.lower) / self.width

    def denormalize(self, unit: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(unit, dtype=float) * self.width

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw `count` uniform points, shape (count, dim)."""
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))


@dataclass(frozen=True)
class KernelHyperparams:
    """Matern 5/2 ARD hyperparameters: signal variance, per-axis lengthscales,
    observation-noise variance."""

    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if self.signal_variance <= 0.0:
            raise ValueError("signal variance must be positive")
        if np.any(ls <= 0.0) or not np.all(np.isfinite(ls)):
            raise ValueError("lengthscales must be positive and finite")
        if self.noise_variance < 0.0:
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def dim(self) -> int:
        return self.lengthscales.size


@dataclass(frozen=True)
class Dataset:
    """Training inputs (n, d) with scalar targets (n,)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_1d(np.asarray(self.targets, dtype=float))
        if X.shape[0] != y.shape[0]:
            raise ValueError("inputs and targets must have equal length")
        if X.size and not np.all(np.isfinite(X)):
            raise ValueError("inputs must be finite")
        if y.size and not np.all(np.isfinite(y)):
            raise ValueError("targets must be finite")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    def __len__(self) -> int:
        return self.targets.size


def _scaled_sqdist(A: np.ndarray, B: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    As = A / lengthscales
    Bs = B / lengthscales
    d2 = (
        np.sum(As**2, axis=1)[:, None]
        + np.sum(Bs**2, axis=1)[None, :]
        - 2.0 * As @ Bs.T
    )
    return np.maximum(d2, 0.0)


def _matern52(r: np.ndarray, signal_variance: float) -> np.ndarray:
    sr = SQRT5 * r
    return signal_variance * (1.0 + sr + sr**2 / 3.0) * np.exp(-sr)


def kernel_eval(a: np.ndarray, b: np.ndarray, h: KernelHyperparams) -> float:
    """Matern 5/2 ARD covariance between two points."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape or a.size != h.dim:
        raise ValueError(
            f"dimension mismatch: a has {a.size}, b has {b.size}, "
            f"kernel expects {h.dim}"
        )
    r = np.sqrt(np.sum(((a - b) / h.lengthscales) ** 2))
    return float(_matern52(r, h.signal_variance))


def kernel_matrix(A: np.ndarray, B: np.ndarray, h: KernelHyperparams) -> np.ndarray:
    """Cross-covariance matrix, shape (len(A), len(B))."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != h.dim or B.shape[1] != h.dim:
        raise ValueError("dimension mismatch between inputs and lengthscales")
    r = np.sqrt(_scaled_sqdist(A, B, h.lengthscales))
    return _matern52(r, h.signal_variance)


def build_gram(
    X: np.ndarray, h: KernelHyperparams, jitter: float | None = None
) -> tuple[np.ndarray, float]:
    """Cholesky factor of K(X, X) + (noise_variance + jitter) I.

    Retries with geometrically increased jitter up to
    JITTER_MAX_FRACTION * signal_variance before giving up.

    Returns (lower-triangular factor, jitter actually used).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("build_gram requires at least one input point")
    if jitter is not None and jitter < 0.0:
        raise ValueError("jitter must be nonnegative")

    K = kernel_matrix(X, X, h)
    diag = h.noise_variance * np.eye(X.shape[0])
    jit = JITTER_START_FRACTION * h.signal_variance if jitter is None else jitter
    cap = JITTER_MAX_FRACTION * h.signal_variance
    while True:
        try:
            L = cholesky(K + diag + jit * np.eye(X.shape[0]), lower=True)
            return L, jit
        except np.linalg.LinAlgError:
            pass
        except ValueError:
            # scipy raises ValueError on NaN/inf entries
            raise NumericalInstabilityError(
                "non-finite entries in the Gram matrix"
            ) from None
        next_jit = max(jit, JITTER_START_FRACTION * h.signal_variance) * JITTER_GROWTH
        if jit >= cap or next_jit > cap * (1.0 + 1e-12):
            raise NumericalInstabilityError(
                f"Cholesky failed at jitter cap {cap:g} (n={X.shape[0]})"
            )
        jit = next_jit


def log_marginal_likelihood(
    data: Dataset, h: KernelHyperparams, jitter: float | None = None
) -> float:
    """Gaussian log marginal likelihood of the targets under the kernel,
    computed via the Cholesky factor of K + noise_variance I."""
    if len(data) == 0:
        raise ValueError("log marginal likelihood requires a nonempty dataset")
    L, _ = build_gram(data.inputs, h, jitter)
    y = data.targets
    alpha = cho_solve((L, True), y)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    n = y.size
    return float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi))


def default_log_bounds(dim: int, fit_noise: bool) -> tuple[np.ndarray, np.ndarray]:
    """Box on log-hyperparameters [log sv, log l_1..d, (log nv)].

    Lengthscale bounds assume unit-box inputs; variance bounds assume
    standardized targets.
    """
    lo = [np.log(1e-4)] + [np.log(1e-3)] * dim
    hi = [np.log(1e2)] + [np.log(10.0)] * dim
    if fit_noise:
        lo.append(np.log(NOISE_VARIANCE_FLOOR))
        hi.append(np.log(1.0))
    return np.array(lo), np.array(hi)


def _pack_log(h: KernelHyperparams, fit_noise: bool) -> np.ndarray:
    head = [np.log(h.signal_variance), *np.log(h.lengthscales)]
    if fit_noise:
        head.append(np.log(max(h.noise_variance, NOISE_VARIANCE_FLOOR)))
    return np.array(head)


def _unpack_log(v: np.ndarray, dim: int, fit_noise: bool, fixed_noise: float) -> KernelHyperparams:
    sv = np.exp(v[0])
    ls = np.exp(v[1 : 1 + dim])
    nv = np.exp(v[1 + dim]) if fit_noise else fixed_noise
    return KernelHyperparams(sv, ls, nv)


def fit_hyperparams(
    data: Dataset,
    init: KernelHyperparams,
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
    *,
    fit_noise: bool = True,
    restarts: int = 4,
    seed: int = 0,
    maxfev: int | None = None,
) -> KernelHyperparams:
    """Maximize the log marginal likelihood over log-hyperparameters.

    Multi-start Nelder-Mead: the first start is `init`, the rest are drawn
    uniformly inside `bounds` with the given seed. Never returns parameters
    whose likelihood is below that of `init` (ties broken by restart index).
    When every restart fails to factorize, warns and returns `init`.
    """
    if len(data) < 2:
        raise ValueError("hyperparameter fitting needs at least 2 points")
    dim = data.inputs.shape[1]
    if bounds is None:
        bounds = default_log_bounds(dim, fit_noise)
    lo, hi = bounds

    # large finite penalty: feeding inf to Nelder-Mead provokes inf-inf
    failure_penalty = 1e15

    def objective(v: np.ndarray) -> float:
        try:
            h = _unpack_log(v, dim, fit_noise, init.noise_variance)
            nll = -log_marginal_likelihood(data, h)
            return nll if np.isfinite(nll) else failure_penalty
        except (NumericalInstabilityError, FloatingPointError, OverflowError):
            return failure_penalty

    # Start from init clipped into the box, but hold the monotonicity
    # contract against init as given.
    init_nll = objective(_pack_log(init, fit_noise))
    x0 = np.clip(_pack_log(init, fit_noise), lo, hi)

    rng = np.random.default_rng(seed)
    starts = [x0] + [rng.uniform(lo, hi) for _ in range(max(restarts - 1, 0))]

    best_v, best_nll = None, np.inf
    for start in starts:
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"maxfev": maxfev} if maxfev else None,
        )
        if res.fun < failure_penalty and res.fun < best_nll:
            best_v, best_nll = res.x, res.fun

    if best_v is None:
        warnings.warn("all hyperparameter restarts failed to factorize; keeping init")
        return init
    if best_nll > init_nll:
        return init
    return _unpack_log(best_v, dim, fit_noise, init.noise_variance)


def _default_hyperparams(dim: int, noise_variance: float) -> KernelHyperparams:
    # Unit-box inputs and standardized targets make these scale-free.
    return KernelHyperparams(1.0, 0.3 * np.ones(dim), noise_variance)


@dataclass(frozen=True)
class GpModel:
    """GP posterior over a bounded domain, with cached factorization.

    Inputs are rescaled to the unit box of `domain` and targets are
    standardized (mean removed, divided by the std, floored at
    TARGET_STD_FLOOR) before any kernel arithmetic, so the hyperparameters
    live in normalized units. Posterior outputs are mapped back to raw
    units. Instances are immutable; `with_observation` and `fit` return
    new models.
    """

    domain: Domain
    X: np.ndarray
    y: np.ndarray
    hyperparams: KernelHyperparams
    fit_noise: bool = True
    standardize: bool = True
    fit_seed: int = 0
    fit_restarts: int = 4
    fit_maxfev: int | None = 300
    refit_restarts: int = 2
    # Lower bound on the fitted noise variance, in standardized target units.
    # Raise it when targets are collected from a drifting process (each one
    # scored against a slightly different snapshot): without a floor the ML
    # fit explains the drift by collapsing lengthscales to interpolation
    # islands, and the posterior mean degenerates to nearest-sample lookup.
    noise_floor: float = NOISE_VARIANCE_FLOOR
    n_at_last_fit: int = 0
    # derived, filled in __post_init__
    _Xn: np.ndarray = field(repr=False, default=None)
    _y_mean: float = field(repr=False, default=0.0)
    _y_std: float = field(repr=False, default=1.0)
    _chol: np.ndarray = field(repr=False, default=None)
    _alpha: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(-1, self.domain.dim)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError("inputs and targets must have equal length")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        Xn = self.domain.normalize(X) if X.size else X
        object.__setattr__(self, "_Xn", Xn)
        if y.size == 0:
            return
        if self.standardize:
            mean = float(np.mean(y))
            # Constant targets: center only. Dividing by a floored ~0 std
            # would scale raw predictive variance by ~0 and freeze search.
            std_raw = float(np.std(y))
            std = std_raw if std_raw > TARGET_STD_FLOOR else 1.0
        else:
            mean, std = 0.0, 1.0
        ys = (y - mean) / std
        L, _ = build_gram(Xn, self.hyperparams)
        object.__setattr__(self, "_y_mean", mean)
        object.__setattr__(self, "_y_std", std)
        object.__setattr__(self, "_chol", L)
        object.__setattr__(self, "_alpha", cho_solve((L, True), ys))

    @classmethod
    def create(
        cls,
        domain: Domain,
        X: np.ndarray | None = None,
        y: np.ndarray | None = None,
        hyperparams: KernelHyperparams | None = None,
        *,
        noise_init: float | None = None,
        **options,
    ) -> "GpModel":
        """Build a model; `noise_init` is a raw-unit observation-noise std
        used to seed the noise hyperparameter."""
        X = np.empty((0, domain.dim)) if X is None else np.asarray(X, dtype=float)
        y = np.empty(0) if y is None else np.asarray(y, dtype=float)
        if hyperparams is None:
            std = float(np.std(y)) if y.size else 0.0
            if std <= TARGET_STD_FLOOR:
                std = 1.0
            nv = NOISE_VARIANCE_FLOOR
            if noise_init is not None:
                nv = float(np.clip((noise_init / std) ** 2, NOISE_VARIANCE_FLOOR, 1.0))
            hyperparams = _default_hyperparams(domain.dim, nv)
        return cls(domain=domain, X=X, y=y, hyperparams=hyperparams, **options)

    @property
    def n(self) -> int:
        return self.y.size

    def _standardized_dataset(self) -> Dataset:
        ys = (self.y - self._y_mean) / self._y_std
        return Dataset(self._Xn, ys)

    def posterior_batch(
        self, Q: np.ndarray, clamp: bool = True
    ) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at query points, shape (m, d) -> two (m,)."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.domain.dim:
            raise ValueError("query dimension does not match the domain")
        m = Q.shape[0]
        if self.n == 0:
            prior_var = self.hyperparams.signal_variance
            return np.zeros(m), np.full(m, prior_var)
        Qn = self.domain.normalize(Q)
        Ks = kernel_matrix(self._Xn, Qn, self.hyperparams)
        mean_s = Ks.T @ self._alpha
        V = solve_triangular(self._chol, Ks, lower=True)
        var_s = self.hyperparams.signal_variance - np.sum(V**2, axis=0)
        if clamp:
            var_s = np.maximum(var_s, 0.0)
        mean = self._y_mean + self._y_std * mean_s
        var = self._y_std**2 * var_s
        return mean, var

    def posterior(self, q: np.ndarray) -> tuple[float, float]:
        mean, var = self.posterior_batch(np.atleast_2d(q))
        return float(mean[0]), float(var[0])

    def lml(self) -> float:
        """Log marginal likelihood of the standardized data under the
        current hyperparameters."""
        return log_marginal_likelihood(self._standardized_dataset(), self.hyperparams)

    def fit(self, *, restarts: int | None = None, maxfev: int | None = None) -> "GpModel":
        """Refit hyperparameters on the standardized data; returns a new model."""
        if self.n < 2:
            return replace(self, n_at_last_fit=self.n)
        bounds = None
        if self.fit_noise and self.noise_floor > NOISE_VARIANCE_FLOOR:
            lo, hi = default_log_bounds(self.domain.dim, True)
            lo[-1] = np.log(self.noise_floor)
            bounds = (lo, hi)
        init = self.hyperparams
        if self.fit_noise and init.noise_variance < self.noise_floor:
            init = replace(init, noise_variance=self.noise_floor)
        fitted = fit_hyperparams(
            self._standardized_dataset(),
            init,
            bounds,
            fit_noise=self.fit_noise,
            restarts=self.fit_restarts if restarts is None else restarts,
            seed=self.fit_seed,
            maxfev=self.fit_maxfev if maxfev is None else maxfev,
        )
        return replace(self, hyperparams=fitted, n_at_last_fit=self.n)

    @property
    def raw_noise_std(self) -> float:
        """Fitted observation-noise standard deviation in raw target units."""
        return float(np.sqrt(self.hyperparams.noise_variance) * self._y_std)

    def _due_for_refit(self, n_new: int) -> bool:
        return n_new <= REFIT_EVERY_BELOW or n_new - self.n_at_last_fit >= REFIT_PERIOD

    def with_observation(self, x: np.ndarray, value: float) -> "GpModel":
        """Extend the dataset by one point, refitting per the cadence policy
        (warm-started, fewer restarts than a cold fit)."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        X = np.vstack([self.X, x]) if self.X.size else x
        y = np.append(self.y, float(value))
        model = replace(self, X=X, y=y)
        if model._due_for_refit(model.n):
            model = model.fit(restarts=self.refit_restarts)
        return model


def posterior(model: GpModel, q: np.ndarray) -> tuple[float, float]:
    """Posterior predictive (mean, variance) at a single query point."""
    return model.posterior(q)
