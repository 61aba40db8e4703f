"""Split chain: level draws, construction, estimation and the batch estimators."""

import math

import numpy as np
import pytest

from models import AdaptationStrategy, SplitConfig, WeightMode
from services.split_sampler import (
    SampleBatch,
    SplitSampler,
    SplitSamplingEstimator,
    build_levels,
    estimate_z,
    estimate_z_of_m,
    integrate_level_estimates,
    rao_blackwell_marginal,
    run_estimation,
    run_fixed_weight_chain,
    run_split_sampling,
    sample_level,
    visit_frequency_marginal,
)
from services.targets import (
    ConstantLikelihoodModel,
    ExponentialLikelihoodToyModel,
    ExponentialPriorToyModel,
    SpikeToyModel,
    UniformToyModel,
)
from services.weight_function import CumulativeWeight, LevelGrid, build_cumulative, weight_from_knots
from utils.errors import ConstructionError, EstimationError, ErrorCode, LevelConstructionError


def uniform_knots(levels, rho=math.exp(-1.0)):
    t = np.arange(levels + 1, dtype=float)
    return 1.0 - rho ** t


class TestSampleLevel:
    def test_piecewise_exponential_draw_is_below_likelihood(self, rng):
        weight = weight_from_knots([0.0, 1.0, 2.0], np.log([1.0, 3.0, 9.0]))
        for likelihood in (0.5, 1.0, 1.7, 2.0, 5.0):
            for _ in range(200):
                m = sample_level(likelihood, weight, rng)
                assert 0.0 <= m < likelihood

    def test_discrete_draw_is_a_knot_below_likelihood(self, rng):
        weight = weight_from_knots([0.0, 1.0, 2.0], np.log([1.0, 3.0, 9.0]), WeightMode.DISCRETE)
        draws = {sample_level(1.5, weight, rng) for _ in range(500)}
        assert draws == {0.0, 1.0}
        assert {sample_level(1.0, weight, rng) for _ in range(50)} == {0.0}

    def test_discrete_draw_frequencies(self, rng):
        # L above every knot: P(level t) = omega_t / Omega_T = 1/9, 2/9, 6/9
        weight = weight_from_knots([0.0, 1.0, 2.0], np.log([1.0, 3.0, 9.0]), WeightMode.DISCRETE)
        draws = np.array([sample_level(3.0, weight, rng) for _ in range(20000)])
        freq = np.array([np.mean(draws == k) for k in (0.0, 1.0, 2.0)])
        assert np.allclose(freq, [1 / 9, 2 / 9, 6 / 9], atol=0.015)

    def test_slice_draw_is_uniform(self, rng):
        draws = np.array([sample_level(2.0, CumulativeWeight.slice_weight(), rng) for _ in range(20000)])
        assert draws.max() < 2.0
        assert draws.mean() == pytest.approx(1.0, abs=0.03)


class TestIntegrateLevelEstimates:
    def test_exact_for_log_linear_curve(self):
        # Z(m) = e^-m is log-linear, so the interpolation integral is exact
        m = np.array([0.0, 0.5, 1.5, 3.0])
        grid = LevelGrid(thresholds=m, log_estimates=-m, log_weights=m)
        assert integrate_level_estimates(grid) == pytest.approx(1.0 - math.exp(-3.0))

    def test_flat_segments_and_tail(self):
        grid = LevelGrid(thresholds=np.array([0.0, 2.0]), log_estimates=np.zeros(2),
                         log_weights=np.zeros(2), tail_integral=0.25)
        assert integrate_level_estimates(grid) == pytest.approx(2.25)

    def test_single_level_is_tail(self):
        grid = LevelGrid.root()
        grid.tail_integral = 0.7
        assert integrate_level_estimates(grid) == 0.7

    def test_rejects_zero_estimate(self):
        grid = LevelGrid(thresholds=np.array([0.0, 1.0]), log_estimates=np.array([0.0, -math.inf]),
                         log_weights=np.zeros(2))
        with pytest.raises(ConstructionError):
            integrate_level_estimates(grid)


class TestBuildLevels:
    def test_rare_event_levels_end_at_gamma(self, rng):
        config = SplitConfig(gamma=0.95, n_level=2000, nu_init=100.0)
        grid = build_levels(UniformToyModel(), config, rng)
        assert grid.thresholds[0] == 0.0
        assert np.all(np.diff(grid.thresholds) > 0.0)
        assert grid.top_threshold == 0.95
        assert np.allclose(grid.log_estimates, np.arange(grid.level_count + 1) * math.log(config.rho))
        # quantile thresholds track 1 - rho^t on the uniform toy
        assert grid.thresholds[1] == pytest.approx(1.0 - config.rho, abs=0.05)

    def test_level_cap_forces_gamma(self, rng):
        config = SplitConfig(gamma=0.999, n_level=200, t_max=2)
        sampler = SplitSampler(UniformToyModel(), config, rng)
        grid = sampler.build_levels()
        assert grid.level_count == 3
        assert grid.top_threshold == 0.999
        assert any("forcing" in w for w in sampler.warnings)

    def test_budget_exhaustion_keeps_partial_grid(self, rng):
        # a constant likelihood never exceeds its first threshold
        config = SplitConfig(gamma=2.0, n_level=10, level_budget_factor=2)
        with pytest.raises(LevelConstructionError) as info:
            build_levels(ConstantLikelihoodModel(1.0), config, rng)
        assert info.value.error_code == ErrorCode.LEVEL_BUDGET_EXHAUSTED
        assert info.value.partial_grid.level_count == 1
        assert info.value.partial_grid.top_threshold == 1.0

    def test_evidence_levels_stop_when_tail_is_negligible(self, rng):
        config = SplitConfig(n_level=200, boost=1.0)
        grid = build_levels(ExponentialLikelihoodToyModel(), config, rng)
        assert 0 < grid.level_count < config.t_max
        assert grid.top_threshold < 1.0

    def test_uniform_toy_thresholds_follow_quantile_recursion(self, rng):
        # P(L > m_t | L > m_{t-1}) = rho gives 1 - m_t = rho (1 - m_{t-1}) at every level
        config = SplitConfig(gamma=0.9999, n_level=2000)
        grid = build_levels(UniformToyModel(), config, rng)
        m = grid.thresholds[:-1]
        assert grid.level_count >= 8
        assert np.allclose(1.0 - m[1:], config.rho * (1.0 - m[:-1]), rtol=0.15)
        assert np.allclose(1.0 - m, config.rho ** np.arange(m.size), rtol=0.35)

    def test_known_likelihood_bound_keeps_building_into_hidden_spike(self, rng):
        # the slab alone never shows a likelihood above 23; only L_max = 2e10 reveals the spike
        model = SpikeToyModel()
        config = SplitConfig(n_level=200, boost=1.0)
        sampler = SplitSampler(model, config, rng)
        grid = sampler.build_levels()
        assert grid.top_threshold > model.spike_height
        assert grid.level_count < config.t_max
        assert sampler.state.max_likelihood > model.spike_height

    def test_construction_within_budget_share(self, rng):
        config = SplitConfig(gamma=0.999, n_level=2000, nu_init=100.0, budget=10_000)
        sampler = SplitSampler(UniformToyModel(), config, rng)
        grid = sampler.build_levels()
        assert grid.top_threshold == 0.999
        assert not any("forcing" in w for w in sampler.warnings)
        assert sampler.state.kernel_applications <= 5_000
        assert np.all(np.diff(grid.thresholds) > 0.0)

    def test_construction_beyond_budget_is_an_error(self, rng):
        config = SplitConfig(gamma=0.999999, n_level=100, budget=1_000)
        sampler = SplitSampler(UniformToyModel(), config, rng)
        with pytest.raises(LevelConstructionError) as info:
            sampler.build_levels()
        assert info.value.error_code == ErrorCode.LEVEL_BUDGET_EXHAUSTED
        assert "construction budget" in str(info.value)
        assert info.value.partial_grid.level_count >= 1
        assert sampler.state.kernel_applications <= 500


class TestEstimation:
    def test_rare_event_on_uniform_toy(self, rng):
        config = SplitConfig(gamma=0.95, n_level=2000, nu_init=1000.0, n=100_000)
        result = run_split_sampling(UniformToyModel(), config, rng)
        assert result.estimate == pytest.approx(0.05, rel=0.1)
        assert result.log_estimate == pytest.approx(math.log(result.estimate))
        assert result.visits.sum() == config.n
        assert result.grid.log_estimates[0] == 0.0

    def test_evidence_on_exponential_prior(self, rng):
        # Z(m) = e^-m, so level interpolation adds no bias and Z = 1
        config = SplitConfig(n_level=1000, nu_init=1000.0, boost=1.0, n=50_000)
        result = run_split_sampling(ExponentialPriorToyModel(), config, rng)
        assert result.estimate == pytest.approx(1.0, rel=0.1)
        assert result.evidence == result.estimate
        assert result.grid.tail_integral > 0.0

    def test_level_estimates_decrease(self, rng):
        config = SplitConfig(gamma=0.9, n_level=500, nu_init=100.0, n=20_000)
        result = run_split_sampling(UniformToyModel(), config, rng)
        assert np.all(np.diff(result.grid.log_estimates) < 0.0)
        thresholds, estimates = result.curve
        assert estimates == pytest.approx(1.0 - thresholds, rel=0.25)

    def test_budget_counts_all_kernel_applications(self, rng):
        config = SplitConfig(gamma=0.9, n_level=500, budget=20_000, kernel_steps=2)
        result = run_split_sampling(UniformToyModel(), config, rng)
        assert result.kernel_applications <= 20_000
        assert result.kernel_applications >= 20_000 - 2
        assert result.estimation_iterations * 2 >= 20_000 * config.estimation_share

    def test_no_estimation_budget_is_an_error(self, rng):
        grid = LevelGrid(thresholds=np.array([0.0, 0.5, 0.9]), log_estimates=np.log([1.0, 0.5, 0.1]),
                         log_weights=np.zeros(3))
        sampler = SplitSampler(UniformToyModel(), SplitConfig(gamma=0.9, budget=100), rng)
        sampler.state.kernel_applications = 100
        with pytest.raises(LevelConstructionError) as info:
            sampler.run_estimation(grid)
        assert info.value.error_code == ErrorCode.LEVEL_BUDGET_EXHAUSTED
        assert info.value.partial_grid.level_count == 2

    def test_evidence_includes_hidden_spike(self, rng):
        # slab mass 1, spike mass 1.5; log-linear interpolation across the
        # flat stretch of Z(m) below the spike keeps the estimate within (1.6, 4)
        model = SpikeToyModel()
        config = SplitConfig(n_level=200, nu_init=1000.0, boost=1.0, n=50_000)
        result = run_split_sampling(model, config, rng)
        assert model.evidence == pytest.approx(2.5, rel=1e-6)
        assert 1.6 < result.evidence < 4.0

    def test_self_balancing_corrects_misseeded_levels(self, rng):
        rho = math.exp(-1.0)
        truth = np.arange(4) * math.log(rho)
        seeded = np.array([0.0, -0.3, -3.2, -3.5])
        grid = LevelGrid(thresholds=uniform_knots(3, rho), log_estimates=seeded, log_weights=-seeded)
        config = SplitConfig(nu_init=10.0, weight_mode=WeightMode.DISCRETE)
        result = run_estimation(UniformToyModel(), grid, config, rng, n=20_000)
        before = np.abs(seeded - truth)[1:]
        after = np.abs(result.grid.log_estimates - truth)[1:]
        assert np.all(after < before)
        assert np.all(after < 0.15)
        # visit masses only ever grow from their seeded values
        assert np.all(result.grid.log_visits >= math.log(config.nu_init) + seeded)

    @pytest.mark.parametrize("adaptation", [AdaptationStrategy.REBALANCE, AdaptationStrategy.FLAT_HISTOGRAM])
    def test_visit_driven_adaptation(self, rng, adaptation):
        config = SplitConfig(gamma=0.9, n_level=500, nu_init=100.0, n=20_000,
                             adaptation=adaptation, adaptation_interval=2_000)
        result = run_split_sampling(UniformToyModel(), config, rng)
        assert result.estimate == pytest.approx(0.1, rel=0.3)

    def test_trace_rows(self, rng):
        config = SplitConfig(gamma=0.9, n_level=200, n=1_000, trace_every=100)
        result = run_split_sampling(UniformToyModel(), config, rng)
        iterations = [row.iteration for row in result.trace]
        assert iterations == sorted(iterations)
        assert all(i % 100 == 0 for i in iterations)
        assert all(0 <= row.level <= result.grid.level_count for row in result.trace)

    def test_same_seed_same_result(self):
        config = SplitConfig(gamma=0.9, n_level=200, n=2_000)
        first = run_split_sampling(UniformToyModel(), config, np.random.default_rng(5))
        second = run_split_sampling(UniformToyModel(), config, np.random.default_rng(5))
        assert first.estimate == second.estimate
        assert np.array_equal(first.grid.thresholds, second.grid.thresholds)

    def test_estimator_adapter(self, rng):
        estimator = SplitSamplingEstimator(SplitConfig(gamma=0.9, n_level=200, n=2_000))
        result = estimator.estimate(UniformToyModel(), rng)
        assert result.estimator == "ss"
        assert result.schedule[-1] == 0.9
        assert result.diagnostics["levels"] == len(result.schedule) - 1


class TestBatchEstimators:
    def test_empty_batch(self):
        batch = SampleBatch(likelihoods=np.empty(0), thresholds=np.empty(0),
                            levels=np.empty(0, dtype=np.int64), log_omega=np.empty(0))
        with pytest.raises(EstimationError):
            estimate_z(batch)
        with pytest.raises(EstimationError):
            estimate_z_of_m(batch, 0.5)

    def test_z_of_zero_is_one(self, rng):
        weight = build_cumulative(LevelGrid(thresholds=uniform_knots(3), log_estimates=np.zeros(4),
                                            log_weights=np.arange(4.0)))
        batch = run_fixed_weight_chain(UniformToyModel(), weight, 500, rng)
        assert estimate_z_of_m(batch, 0.0) == pytest.approx(1.0)
        assert estimate_z_of_m(batch, 2.0) == 0.0

    @pytest.mark.parametrize("mode", [WeightMode.DISCRETE, WeightMode.PIECEWISE_EXPONENTIAL])
    def test_rao_blackwell_marginal_sums_to_one(self, rng, mode):
        weight = weight_from_knots(uniform_knots(4), np.arange(5.0), mode)
        batch = run_fixed_weight_chain(UniformToyModel(), weight, 2_000, rng)
        marginal = rao_blackwell_marginal(batch)
        assert marginal.shape == (5,)
        assert np.all(marginal >= 0.0)
        assert marginal.sum() == pytest.approx(1.0)
        assert visit_frequency_marginal(batch).sum() == pytest.approx(1.0)

    def test_slice_chain_gives_harmonic_mean(self, rng):
        model = ExponentialLikelihoodToyModel()
        batch = run_fixed_weight_chain(model, CumulativeWeight.slice_weight(), 20_000, rng)
        assert np.allclose(batch.log_omega, np.log(batch.likelihoods))
        assert estimate_z(batch) == pytest.approx(model.evidence, rel=0.05)

    def test_marginal_needs_grid_weight(self, rng):
        batch = run_fixed_weight_chain(UniformToyModel(), CumulativeWeight.slice_weight(), 10, rng)
        with pytest.raises(ConstructionError):
            rao_blackwell_marginal(batch)

    def test_rao_blackwell_marginal_has_lower_variance(self, rng):
        # Omega_t = 1 / Z_t on the uniform toy; same chains feed both estimators
        weight = weight_from_knots(uniform_knots(3), np.arange(4.0), WeightMode.DISCRETE)
        averaged, counted = [], []
        for _ in range(30):
            batch = run_fixed_weight_chain(UniformToyModel(), weight, 1_000, rng)
            averaged.append(rao_blackwell_marginal(batch))
            counted.append(visit_frequency_marginal(batch))
        assert np.var(averaged, axis=0).sum() < np.var(counted, axis=0).sum()
        assert np.allclose(np.mean(averaged, axis=0), np.mean(counted, axis=0), atol=0.03)
