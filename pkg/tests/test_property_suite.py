import math

import numpy as np
import pytest

from models import PropertyCheck
from services.property_suite_service import (
    inclusion_density,
    product_estimator_density,
    property_suite_service,
    split_tail_probability,
    summarise,
)

IDENTITY_CHECKS = {
    "fubini_identity",
    "harmonic_mean_reduction",
    "product_estimator_density",
    "inclusion_density",
    "product_weight_closed_forms",
    "nested_sampling_matching",
    "nested_sampling_shrinkage",
    "ce_identity_weight",
    "ce_identity_equals_cmc",
}


class TestIdentityGroup:
    def test_all_identities_hold(self):
        checks = property_suite_service.run(seed=0)
        assert {c.name for c in checks} == IDENTITY_CHECKS
        failed = [c.name for c in checks if not c.passed]
        assert failed == []
        assert all(c.group == "identity" for c in checks)

    @pytest.mark.parametrize("seed", [1, 7, 12345])
    def test_identities_hold_for_other_seeds(self, seed):
        assert summarise(property_suite_service.run(seed=seed)) == (9, 0)

    def test_same_seed_same_values(self):
        first = [c.value for c in property_suite_service.run(seed=3)]
        second = [c.value for c in property_suite_service.run(seed=3)]
        assert first == second


class TestFiniteSpaceDensities:
    def test_single_stage_is_prior(self):
        prior = np.array([0.2, 0.3, 0.5])
        likelihoods = np.array([0.1, 0.5, 0.9])
        thresholds = np.array([0.0])
        assert np.allclose(product_estimator_density(prior, likelihoods, thresholds), prior)
        assert np.allclose(inclusion_density(prior, likelihoods, thresholds), prior)

    def test_two_stage_densities(self):
        prior = np.array([0.5, 0.5])
        likelihoods = np.array([0.2, 0.8])
        thresholds = np.array([0.0, 0.5])
        # stage 0 samples the prior, stage 1 only the upper state
        assert np.allclose(product_estimator_density(prior, likelihoods, thresholds), [0.25, 0.75])
        # inclusion weights the upper state by 1 + (1 - 0.5) / 0.5
        assert np.allclose(inclusion_density(prior, likelihoods, thresholds), [1 / 3, 2 / 3])

    def test_split_tail_without_weight_is_prior_tail(self):
        # omega = 0 and Omega = 1 leave pi_SS(L > m) = Z(m)
        value = split_tail_probability(1.5, lambda s: math.exp(-s), lambda s: 0.0, 1.0, 5.0)
        assert value == pytest.approx(math.exp(-1.5))


class TestSamplerGroup:
    def test_gibbs_conditional(self):
        check = property_suite_service.gibbs_conditional(np.random.default_rng(0))
        assert check.passed, check.detail
        assert check.group == "sampler"

    def test_uniform_occupancy(self):
        check = property_suite_service.uniform_occupancy(np.random.default_rng(0))
        assert check.passed
        assert check.value > 0.001

    @pytest.mark.slow
    def test_metropolis_uniform_marginal(self):
        check = property_suite_service.metropolis_uniform_marginal(np.random.default_rng(0))
        assert check.passed

    @pytest.mark.slow
    def test_full_suite(self):
        checks = property_suite_service.run(seed=0, sampler_checks=True)
        assert summarise(checks) == (12, 0)


def test_summarise_counts():
    checks = [
        PropertyCheck(name="a", passed=True, value=0.0, tolerance=1.0),
        PropertyCheck(name="b", passed=False, value=2.0, tolerance=1.0),
        PropertyCheck(name="c", passed=True, value=0.5, tolerance=1.0),
    ]
    assert summarise(checks) == (2, 1)
