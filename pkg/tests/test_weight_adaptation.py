import math

import numpy as np
import pytest

from models import WeightMode
from services.weight_adaptation import (
    flat_histogram_update,
    harmonic_mean_weight,
    rebalance_weights,
    step_size,
)
from services.weight_function import CumulativeWeight, evaluate_cumulative, weight_from_knots
from utils.errors import ConstructionError, EstimationError


@pytest.fixture
def weight():
    return weight_from_knots([0.0, 1.0, 2.0], np.log([1.0, 2.0, 4.0]))


def omegas(weight):
    return np.exp(np.asarray(weight.log_omega))


def test_step_size_schedule():
    assert step_size(1, 2.0, 0.65) == 2.0
    assert step_size(4, 1.0, 0.5) == pytest.approx(0.5)
    assert step_size(10, 1.0, 0.65) < step_size(9, 1.0, 0.65)


def test_rebalance_raises_under_visited_levels(weight):
    # jumps 1, 1, 2 scaled by phi / mu = 1, 2, 2
    updated = rebalance_weights(np.array([2.0, 1.0, 1.0]), weight, cap=2.0)
    assert np.allclose(omegas(updated), [1.0, 3.0, 7.0])


def test_rebalance_ratio_is_capped(weight):
    updated = rebalance_weights(np.array([100.0, 1.0, 1.0]), weight, cap=0.5)
    root = math.exp(0.5)
    assert np.allclose(omegas(updated), [1.0, 1.0 + root, 1.0 + 3.0 * root])


def test_rebalance_keeps_unvisited_levels(weight):
    updated = rebalance_weights(np.array([1.0, 1.0, 0.0]), weight)
    assert np.allclose(omegas(updated), omegas(weight))


def test_rebalance_errors(weight):
    with pytest.raises(ConstructionError):
        rebalance_weights(np.array([1.0, 1.0]), weight)
    with pytest.raises(EstimationError):
        rebalance_weights(np.zeros(3), weight)
    with pytest.raises(ConstructionError):
        rebalance_weights(np.ones(3), CumulativeWeight.slice_weight())


def test_flat_histogram_skips_uneven_visits(weight):
    updated, flat = flat_histogram_update(np.array([0.6, 0.2, 0.2]), weight, None, gain=1.0, tolerance=0.05)
    assert not flat
    assert updated is weight


def test_flat_histogram_lowers_over_visited_level(weight):
    updated, flat = flat_histogram_update(np.array([0.35, 0.33, 0.32]), weight, None, gain=1.0, tolerance=0.05)
    assert flat
    assert evaluate_cumulative(updated, 0.0) == pytest.approx(1.0)
    # level 0 loses weight relative to the rest
    assert evaluate_cumulative(updated, 1.0) > evaluate_cumulative(weight, 1.0)


def test_flat_histogram_fixed_point(weight):
    updated, flat = flat_histogram_update(np.array([5.0, 5.0, 5.0]), weight, None, gain=0.5, tolerance=0.05)
    assert flat
    assert np.allclose(omegas(updated), omegas(weight))


def test_flat_histogram_converges_on_three_level_chain(rng):
    # a discrete-weight chain occupies level t with probability proportional to omega_t Z_t
    z = np.array([1.0, 0.1, 0.01])

    def occupancy(w):
        p = np.exp(w.log_jumps()) * z
        return p / p.sum()

    jumps = np.array([1.1, 1.0, 0.9]) / z / 1.1
    current = weight_from_knots([0.0, 1.0, 2.0], np.log(np.cumsum(jumps)), WeightMode.DISCRETE)
    start = np.max(np.abs(occupancy(current) - 1.0 / 3.0))
    for k in range(1, 301):
        visits = rng.multinomial(20_000, occupancy(current))
        current, flat = flat_histogram_update(visits, current, None, step_size(k, 1.0, 0.65), tolerance=0.2)
        assert flat
    assert np.max(np.abs(occupancy(current) - 1.0 / 3.0)) < min(0.01, start / 3.0)


def test_harmonic_mean_weight_solves_matching_condition():
    # L = 1 everywhere gives h = 1, so kappa e^kappa = 1 at cap 1
    weight = harmonic_mean_weight(np.zeros(50), cap=1.0)
    assert weight.kappa * math.exp(weight.kappa) == pytest.approx(1.0, rel=1e-10)
    assert weight.kappa == pytest.approx(0.5671432904097838, rel=1e-10)


def test_harmonic_mean_weight_from_spread_likelihoods():
    log_l = np.log([0.5, 1.0, 2.0])
    weight = harmonic_mean_weight(log_l, cap=3.0)
    h = np.mean(1.0 / np.exp(log_l))
    assert weight.kappa * math.exp(weight.kappa * 3.0) == pytest.approx(h, rel=1e-10)


def test_harmonic_mean_weight_needs_draws():
    with pytest.raises(EstimationError):
        harmonic_mean_weight(np.array([]), cap=1.0)
