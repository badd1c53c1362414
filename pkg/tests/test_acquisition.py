"""Expected improvement: closed form vs Monte-Carlo, proposal search
determinism, incumbent bookkeeping, degenerate fallbacks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bopest.acquisition import (
    AcquisitionConfig,
    BoState,
    Incumbent,
    expected_improvement,
    expected_improvement_batch,
    propose_next,
    update_incumbent,
)
from bopest.gp import Domain, GpModel, KernelHyperparams
from oracles import oracle_expected_improvement

# Hand values: EI = imp * Phi(z) + sigma * phi(z), z = imp / sigma
EI_STANDARD_AT_INCUMBENT = 0.3989422804014327  # mean=0, var=1, inc=0 -> phi(0)
EI_STANDARD_ONE_BELOW = 1.0833154705876863  # inc=1 -> Phi(1) + phi(1)


def make_model(seed=0, n=12, noise=1e-3, dim=1):
    rng = np.random.default_rng(seed)
    dom = Domain(np.zeros(dim), np.ones(dim))
    X = rng.uniform(0, 1, size=(n, dim))
    y = np.sin(5.0 * X[:, 0]) + noise * rng.normal(size=n)
    h = KernelHyperparams(1.0, 0.3 * np.ones(dim), noise**2)
    return GpModel(domain=dom, X=X, y=y, hyperparams=h), X, y


def state_from(X, y):
    state = BoState()
    for x, v in zip(X, y):
        state = update_incumbent(state, x, v)
    return state


class TestExpectedImprovement:
    def test_frozen_values(self):
        assert expected_improvement(0.0, 1.0, 0.0) == pytest.approx(
            EI_STANDARD_AT_INCUMBENT, abs=1e-14
        )
        assert expected_improvement(0.0, 1.0, 1.0) == pytest.approx(
            EI_STANDARD_ONE_BELOW, abs=1e-14
        )

    def test_zero_below_sigma_floor(self):
        # even with large positive improvement
        assert expected_improvement(0.0, 1e-30, 10.0) == 0.0
        assert expected_improvement(0.0, 0.0, 10.0) == 0.0

    def test_tends_to_improvement_for_tiny_sigma(self):
        ei = expected_improvement(0.0, 1e-12, 0.5)
        assert ei == pytest.approx(0.5, rel=1e-5)

    def test_xi_shifts_improvement(self):
        assert expected_improvement(0.0, 1.0, 1.0, xi=1.0) == pytest.approx(
            EI_STANDARD_AT_INCUMBENT, abs=1e-14
        )

    @given(
        mean=st.floats(-5, 5),
        var=st.floats(0, 4),
        inc=st.floats(-5, 5),
        xi=st.floats(0, 1),
    )
    @settings(max_examples=80, deadline=None)
    def test_nonnegative(self, mean, var, inc, xi):
        assert expected_improvement(mean, var, inc, xi) >= 0.0

    @given(
        m1=st.floats(-3, 3),
        dm=st.floats(0.01, 3),
        var=st.floats(0.01, 4),
        inc=st.floats(-3, 3),
    )
    @settings(max_examples=60, deadline=None)
    def test_decreasing_in_mean(self, m1, dm, var, inc):
        hi = expected_improvement(m1, var, inc)
        lo = expected_improvement(m1 + dm, var, inc)
        assert hi >= lo - 1e-12

    def test_matches_monte_carlo(self):
        rng = np.random.default_rng(17)
        for i in range(8):
            mean = float(rng.uniform(-1, 1))
            var = float(rng.uniform(0.05, 2.0))
            inc = mean + float(rng.uniform(-0.5, 1.5))
            got = expected_improvement(mean, var, inc)
            want = oracle_expected_improvement(mean, var, inc, 0.0, 400_000, seed=i)
            assert got == pytest.approx(want, rel=0.02, abs=5e-4)

    def test_batch_matches_scalar(self):
        means = np.array([-0.5, 0.0, 0.7])
        vars_ = np.array([0.2, 1.0, 0.0])
        batch = expected_improvement_batch(means, vars_, 0.3, xi=0.1)
        for i in range(3):
            assert batch[i] == expected_improvement(means[i], vars_[i], 0.3, xi=0.1)

    def test_invalid_inputs_raise(self):
        with pytest.raises(ValueError, match="negative"):
            expected_improvement(0.0, -0.5, 0.0)
        with pytest.raises(ValueError, match="shape"):
            expected_improvement_batch(np.zeros(3), np.zeros(2), 0.0)


class TestIncumbent:
    def test_strict_improvement_replaces(self):
        s = update_incumbent(BoState(), [1.0], 5.0)
        s = update_incumbent(s, [2.0], 3.0)
        assert s.incumbent.value == 3.0
        assert s.incumbent.point[0] == 2.0
        assert s.iteration == 2

    def test_tie_keeps_first(self):
        s = update_incumbent(BoState(), [1.0], 3.0)
        s = update_incumbent(s, [2.0], 3.0)
        assert s.incumbent.point[0] == 1.0
        assert s.iteration == 2

    def test_worse_value_only_advances_iteration(self):
        s = update_incumbent(BoState(), [1.0], 1.0)
        s2 = update_incumbent(s, [2.0], 9.0)
        assert s2.incumbent == s.incumbent
        assert s2.iteration == 2

    def test_point_is_copied(self):
        p = np.array([0.5])
        s = update_incumbent(BoState(), p, 1.0)
        p[0] = 99.0
        assert s.incumbent.point[0] == 0.5

    def test_nonfinite_value_rejected_with_warning(self):
        s = update_incumbent(BoState(), [1.0], 2.0)
        with pytest.warns(UserWarning, match="non-finite"):
            s2 = update_incumbent(s, [0.0], np.nan)
        assert s2 == s  # unchanged, iteration not advanced


class TestProposeNext:
    def test_deterministic(self):
        model, X, y = make_model()
        state = state_from(X, y)
        cfg = AcquisitionConfig(rng_seed=3)
        p1 = propose_next(model, state, cfg)
        p2 = propose_next(model, state, cfg)
        np.testing.assert_array_equal(p1.point, p2.point)
        assert p1.ei == p2.ei and p1.fallback == p2.fallback

    def test_iteration_changes_stream(self):
        model, X, y = make_model()
        state = state_from(X, y)
        cfg = AcquisitionConfig(rng_seed=3, refine_top=0)
        other = BoState(iteration=state.iteration + 1, incumbent=state.incumbent)
        p1 = propose_next(model, state, cfg)
        p2 = propose_next(model, other, cfg)
        assert not np.array_equal(p1.point, p2.point)

    @given(seed=st.integers(0, 500))
    @settings(max_examples=15, deadline=None)
    def test_point_in_domain(self, seed):
        model, X, y = make_model(seed=seed % 7, dim=2, n=8)
        state = state_from(X, y)
        p = propose_next(model, state, AcquisitionConfig(rng_seed=seed, pool_size=64))
        assert model.domain.contains(p.point)

    def test_refinement_never_hurts(self):
        model, X, y = make_model(seed=2)
        state = state_from(X, y)
        plain = propose_next(
            model, state, AcquisitionConfig(rng_seed=5, refine_top=0)
        )
        refined = propose_next(
            model, state, AcquisitionConfig(rng_seed=5, refine_top=8)
        )
        assert refined.ei >= plain.ei - 1e-15

    def test_refinement_improves_on_coarse_pool(self):
        # a coarse pool rarely lands on the EI peak; refinement should
        model, X, y = make_model(seed=4)
        state = state_from(X, y)
        plain = propose_next(
            model, state, AcquisitionConfig(rng_seed=0, pool_size=16, refine_top=0)
        )
        refined = propose_next(
            model, state, AcquisitionConfig(rng_seed=0, pool_size=16, refine_top=4)
        )
        assert refined.ei > plain.ei

    def test_collapsed_posterior_falls_back(self):
        dom = Domain(np.zeros(1), np.ones(1))
        h = KernelHyperparams(1e-30, np.array([0.3]), 0.0)
        model = GpModel(
            domain=dom, X=np.array([[0.5]]), y=np.array([0.0]), hyperparams=h,
            standardize=False,
        )
        state = update_incumbent(BoState(), [0.5], 0.0)
        p = propose_next(model, state, AcquisitionConfig(rng_seed=1))
        assert p.fallback
        assert p.ei == 0.0
        assert dom.contains(p.point)
        p2 = propose_next(model, state, AcquisitionConfig(rng_seed=1))
        np.testing.assert_array_equal(p.point, p2.point)

    def test_requires_incumbent(self):
        model, X, y = make_model()
        with pytest.raises(ValueError, match="incumbent"):
            propose_next(model, BoState(), AcquisitionConfig())

    def test_posterior_mean_rule(self):
        model, X, y = make_model(noise=1e-6)
        state = state_from(X, y)
        cfg = AcquisitionConfig(incumbent_rule="posterior_mean")
        # nearly noise-free: the rule should agree with the best observation
        p = propose_next(model, state, cfg)
        assert model.domain.contains(p.point)
        dom = Domain(np.zeros(1), np.ones(1))
        empty = GpModel.create(dom)
        with pytest.raises(ValueError, match="observations"):
            propose_next(empty, state_from(X, y), cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AcquisitionConfig(pool_size=0)
        with pytest.raises(ValueError):
            AcquisitionConfig(refine_half_width=0.0)
        with pytest.raises(ValueError):
            AcquisitionConfig(incumbent_rule="median")
        with pytest.raises(ValueError):
            AcquisitionConfig(xi=-0.1)

    def test_single_point_proposal_explores(self):
        # variance-driven exploration: with one observation the next query
        # must land well away from it
        dom = Domain(np.array([0.0, 0.0]), np.array([100.0, 100.0]))
        model = GpModel.create(dom, np.array([[50.0, 50.0]]), np.array([1.0]))
        state = update_incumbent(BoState(), [50.0, 50.0], 1.0)
        p = propose_next(model, state, AcquisitionConfig(rng_seed=0))
        dist = np.linalg.norm(p.point - [50.0, 50.0])
        assert dist > 0.1 * dom.diagonal

    def test_short_bo_loop_finds_quadratic_minimum(self):
        dom = Domain(np.zeros(1), np.ones(1))
        f = lambda x: (x[0] - 0.3) ** 2
        model = GpModel.create(dom, fit_maxfev=80)
        state = BoState()
        rng = np.random.default_rng(0)
        for x in dom.sample(rng, 3):
            model = model.with_observation(x, f(x))
            state = update_incumbent(state, x, f(x))
        cfg = AcquisitionConfig(rng_seed=0, pool_size=256)
        for _ in range(7):
            prop = propose_next(model, state, cfg)
            val = f(prop.point)
            model = model.with_observation(prop.point, val)
            state = update_incumbent(state, prop.point, val)
        assert abs(state.incumbent.point[0] - 0.3) < 0.05
