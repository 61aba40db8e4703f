"""Crude Monte Carlo, the multilevel product estimator and cross-entropy."""

import math

import numpy as np
import pytest

from services.baselines import (
    CrossEntropyEstimator,
    ProductEstimator,
    cmc_estimate,
    cross_entropy_estimate,
    product_estimate,
)
from services.baselines.cross_entropy import ce_final_estimate, ce_update, log_likelihood_ratio
from services.baselines.product_estimator import expected_stages
from services.targets import ConstantLikelihoodModel, ShortestPathModel, UniformToyModel
from utils.errors import ConfigError, ErrorCode, StageFailureError


class TestCrudeMonteCarlo:
    def test_zero_threshold_is_certain(self, rng):
        result = cmc_estimate(ShortestPathModel(), 0.0, 10_000, rng)
        assert result.estimate == 1.0
        assert result.std_error == 0.0
        assert result.kernel_applications == 10_000

    def test_binomial_standard_error(self, rng):
        result = cmc_estimate(UniformToyModel(), 0.5, 4_000, rng)
        p = result.estimate
        assert result.std_error == pytest.approx(math.sqrt(p * (1.0 - p) / 4_000))
        assert result.diagnostics["hits"] == round(p * 4_000)

    def test_unbiased_on_uniform_toy(self, rng):
        estimates = [cmc_estimate(UniformToyModel(), 0.9, 1_000, rng).estimate for _ in range(2_000)]
        assert np.mean(estimates) == pytest.approx(0.1, abs=4 * math.sqrt(0.09 / 2_000_000))

    def test_chunking_does_not_change_the_estimate(self):
        whole = cmc_estimate(ShortestPathModel(), 1.0, 5_000, np.random.default_rng(3), chunk_size=5_000)
        chunked = cmc_estimate(ShortestPathModel(), 1.0, 5_000, np.random.default_rng(3), chunk_size=1_000)
        assert whole.estimate == chunked.estimate


class TestProductEstimator:
    def test_expected_stages(self):
        assert expected_stages(1.34e-5, math.exp(-1.0)) == 12
        assert expected_stages(0.9, math.exp(-1.0)) == 1

    def test_single_stage_is_crude_fraction(self, rng):
        result = product_estimate(UniformToyModel(), 0.1, 1_000, rng)
        assert result.diagnostics["stages"] == 1
        assert result.estimate == result.diagnostics["last_fraction"]
        assert result.estimate == pytest.approx(0.9, abs=0.05)

    def test_unbiased_on_uniform_toy(self, rng):
        estimates = [product_estimate(UniformToyModel(), 0.99, 500, rng).estimate for _ in range(60)]
        assert np.mean(estimates) == pytest.approx(0.01, rel=0.15)

    def test_schedule_is_increasing(self, rng):
        result = product_estimate(ShortestPathModel(), 1.5, 1_000, rng)
        assert result.schedule[-1] == 1.5
        assert np.all(np.diff(result.schedule) > 0.0)
        assert result.kernel_applications >= 1_000 * result.diagnostics["stages"]

    def test_no_survivors_is_a_stage_failure(self, rng):
        with pytest.raises(StageFailureError) as info:
            product_estimate(ConstantLikelihoodModel(1.0), 2.0, 100, rng)
        assert info.value.error_code == ErrorCode.STAGE_FAILURE

    def test_stalled_quantile_is_degenerate(self, rng):
        class MostlyZeroToy(UniformToyModel):
            def likelihood_batch(self, xs):
                return np.maximum(np.asarray(xs, dtype=float)[:, 0] - 0.9, 0.0)

        with pytest.raises(StageFailureError) as info:
            product_estimate(MostlyZeroToy(), 0.05, 200, rng)
        assert info.value.error_code == ErrorCode.DEGENERATE_QUANTILE

    def test_stage_size_from_reference(self):
        estimator = ProductEstimator(2.0, 1_200_000, math.exp(-1.0), reference=1.34e-5)
        assert estimator.stage_size == 100_000
        assert ProductEstimator(2.0, 5_000, math.exp(-1.0), stage_size=700).stage_size == 700


class TestCrossEntropy:
    def test_identity_proposal_has_unit_weights(self, rng):
        u = ShortestPathModel().scales
        xs = rng.standard_exponential((100, 5)) * u
        assert np.array_equal(log_likelihood_ratio(xs, u, u), np.zeros(100))

    def test_identity_proposal_reproduces_crude_monte_carlo(self):
        model = ShortestPathModel()
        u = model.scales
        estimate, _, _ = ce_final_estimate(u, u, 1.0, 20_000, np.random.default_rng(11))
        crude = cmc_estimate(model, 1.0, 20_000, np.random.default_rng(11))
        assert estimate == crude.estimate

    def test_likelihood_ratio_closed_form(self):
        u = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
        v = np.array([2.0, 1.0, 1.0, 1.0, 1.0])
        x = np.array([[3.0, 1.0, 1.0, 1.0, 1.0]])
        assert log_likelihood_ratio(x, u, v)[0] == pytest.approx(math.log(2.0) - 3.0 * 0.5)

    def test_update_without_elite_samples(self, rng):
        u = ShortestPathModel().scales
        xs = rng.standard_exponential((50, 5)) * u
        with pytest.raises(StageFailureError):
            ce_update(xs, np.zeros(50), 1.0, u, u)

    def test_update_moves_scales_up(self, rng):
        u = ShortestPathModel().scales
        xs = rng.standard_exponential((2_000, 5)) * u
        scores = np.minimum(xs[:, 0] + xs[:, 3], xs[:, 1] + xs[:, 4])
        updated = ce_update(xs, scores, np.quantile(scores, 0.9), u, u)
        assert updated[0] > u[0]
        assert updated[1] > u[1]

    def test_rare_event_estimate(self, rng):
        result = cross_entropy_estimate(ShortestPathModel(), 2.0, 200_000, rng, pilot_size=1_000)
        assert result.estimate == pytest.approx(1.34e-5, rel=0.2)
        stages = result.diagnostics["stages"]
        assert result.diagnostics["final_size"] == 200_000 - stages * 1_000
        assert result.schedule[-1] == 2.0
        assert result.std_error > 0.0

    def test_infeasible_budget(self, rng):
        with pytest.raises(ConfigError) as info:
            cross_entropy_estimate(ShortestPathModel(), 2.0, 1_500, rng, pilot_size=1_000)
        assert info.value.error_code == ErrorCode.INFEASIBLE_BUDGET

    def test_single_stage_when_threshold_is_common(self, rng):
        result = cross_entropy_estimate(ShortestPathModel(), 0.1, 20_000, rng, pilot_size=1_000)
        assert result.diagnostics["stages"] == 1
        assert result.schedule == [0.1]

    def test_incompatible_model(self, rng):
        estimator = CrossEntropyEstimator(0.5, 10_000, 0.1, 1_000)
        assert not estimator.supports(UniformToyModel())
        with pytest.raises(ConfigError) as info:
            estimator.estimate(UniformToyModel(), rng)
        assert info.value.error_code == ErrorCode.INCOMPATIBLE_ESTIMATOR
