"""One-dimensional targets with closed-form Z(m) and exact constrained samplers."""

import math
from typing import Optional

import numpy as np

from utils.errors import ErrorCode, domain_error
from utils.numerics import safe_log
from ..interfaces.target_model_interface import Sample, TargetModel


class _ToyModel(TargetModel):
    """Scalar toys stored as shape (1,) arrays; subclasses define L on floats."""

    dimension = 1

    def _value(self, value: float) -> float:
        raise NotImplementedError

    def _scalar(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != 1 or not math.isfinite(x[0]):
            raise domain_error("toy models take one finite coordinate", param="x",
                               code=ErrorCode.NON_FINITE_INPUT)
        return float(x[0])

    def likelihood(self, x: np.ndarray) -> float:
        return self._value(self._scalar(x))

    def log_likelihood(self, x: np.ndarray) -> float:
        return safe_log(self.likelihood(x))

    def evaluate(self, x: np.ndarray) -> Sample:
        x = np.asarray(x, dtype=float).reshape(1)
        lik = self.likelihood(x)
        return Sample(x=x, likelihood=lik, log_likelihood=safe_log(lik))

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self._value(float(v)) for v in np.asarray(xs, dtype=float)[:, 0]])

    def sample_prior_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((n, 1))

    def _sample(self, value: float) -> Sample:
        return self.evaluate(np.array([value]))


class UniformToyModel(_ToyModel):
    """x ~ U(0, 1), L(x) = x; L is Uniform(0, 1) under the prior and Z(m) = 1 - m."""

    name = "uniform_toy"
    evidence = 0.5

    @property
    def likelihood_max(self) -> Optional[float]:
        return 1.0

    def tail_probability(self, m: float) -> float:
        return min(max(1.0 - m, 0.0), 1.0)

    def _value(self, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise domain_error("x must lie in [0, 1]", param="x")
        return value

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(xs, dtype=float)[:, 0].copy()

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        self.check_constraint(sample, threshold)
        low = max(threshold, 0.0)
        value = low
        while value <= low:
            value = 1.0 - (1.0 - low) * rng.random()
        return self._sample(value)


class ExponentialLikelihoodToyModel(_ToyModel):
    """x ~ U(0, 1), L(x) = exp(-x); Z = 1 - e^-1 and L_max = 1."""

    name = "exponential_toy"
    evidence = -math.expm1(-1.0)

    @property
    def likelihood_max(self) -> Optional[float]:
        return 1.0

    def tail_probability(self, m: float) -> float:
        if m <= math.exp(-1.0):
            return 1.0
        if m >= 1.0:
            return 0.0
        return -math.log(m)

    def _value(self, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise domain_error("x must lie in [0, 1]", param="x")
        return math.exp(-value)

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(-np.asarray(xs, dtype=float)[:, 0])

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        self.check_constraint(sample, threshold)
        upper = 1.0 if threshold <= 0.0 else min(1.0, -math.log(threshold))
        return self._sample(upper * rng.random())


class ExponentialPriorToyModel(_ToyModel):
    """x ~ Exp(1), L(x) = x; Z(m) = e^-m, so Omega(m) = e^m is exactly piecewise exponential."""

    name = "exponential_prior_toy"
    evidence = 1.0

    def tail_probability(self, m: float) -> float:
        return math.exp(-max(m, 0.0))

    def _value(self, value: float) -> float:
        if value < 0.0:
            raise domain_error("x must be nonnegative", param="x")
        return value

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(xs, dtype=float)[:, 0].copy()

    def sample_prior_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_exponential((n, 1))

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        self.check_constraint(sample, threshold)
        low = max(threshold, 0.0)
        value = low
        while value <= low:
            value = low + rng.standard_exponential()
        return self._sample(value)


class SpikeToyModel(_ToyModel):
    """
    x ~ U(0, 1) with a narrow high spike next to x = 1.

    With u = 1 - x, L = -log u on the slab u > delta and L = H (2 - u / delta)
    on the spike u <= delta. Z(m) follows e^-m up to m = -log delta, stays
    flat at delta until H and falls linearly to 0 at L_max = 2H. A chain that
    has not reached the spike sees no sign of it in the likelihoods it visits.
    """

    name = "spike_toy"

    def __init__(self, spike_mass: float = 1e-10, spike_height: float = 1e10):
        if not 0.0 < spike_mass < 1.0:
            raise domain_error("spike mass must lie in (0, 1)", param="spike_mass")
        if not spike_height > -math.log(spike_mass):
            raise domain_error("spike must rise above the slab", param="spike_height")
        self.spike_mass = float(spike_mass)
        self.spike_height = float(spike_height)
        self._slab_top = -math.log(spike_mass)

    @property
    def evidence(self) -> float:
        delta = self.spike_mass
        return 1.0 - delta + delta * math.log(delta) + 1.5 * delta * self.spike_height

    @property
    def likelihood_max(self) -> Optional[float]:
        return 2.0 * self.spike_height

    def tail_probability(self, m: float) -> float:
        if m <= 0.0:
            return 1.0
        return self._mass_above(m)

    def _mass_above(self, m: float) -> float:
        """Largest u with L(1 - u) > m, i.e. Z(m) for m > 0."""
        delta, height = self.spike_mass, self.spike_height
        if m < self._slab_top:
            return math.exp(-m)
        if m < height:
            return delta
        if m < 2.0 * height:
            return delta * (2.0 - m / height)
        return 0.0

    def _value(self, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise domain_error("x must lie in [0, 1]", param="x")
        u = 1.0 - value
        if u <= self.spike_mass:
            return self.spike_height * (2.0 - u / self.spike_mass)
        return -math.log(u)

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        u = 1.0 - np.asarray(xs, dtype=float)[:, 0]
        spike = u <= self.spike_mass
        out = np.empty_like(u)
        out[spike] = self.spike_height * (2.0 - u[spike] / self.spike_mass)
        out[~spike] = -np.log(u[~spike])
        return out

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        self.check_constraint(sample, threshold)
        width = 1.0 if threshold <= 0.0 else self._mass_above(threshold)
        while True:
            candidate = self._sample(1.0 - width * rng.random())
            if self.exceeds(candidate, threshold):
                return candidate


class ConstantLikelihoodModel(_ToyModel):
    """x ~ U(0, 1), L(x) = c everywhere."""

    name = "constant_toy"

    def __init__(self, value: float = 1.0):
        if not value > 0.0:
            raise domain_error("constant likelihood must be positive", param="value")
        self.value = float(value)

    @property
    def evidence(self) -> float:
        return self.value

    @property
    def likelihood_max(self) -> Optional[float]:
        return self.value

    def _value(self, value: float) -> float:
        return self.value

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        self.check_constraint(sample, threshold)
        return self._sample(rng.random())
