"""
Spike-and-slab Gaussian mixture likelihood on a uniform box prior.

L(x) = 100 N(x; c 1, u^2 I) + N(x; 0, v^2 I) with x ~ Uniform[-0.5, 0.5]^C.
Both components sit well inside the box, so Z = 101 to within 1e-6
relative. The constrained kernel is single-coordinate random-walk
Metropolis-Hastings with a log-uniform step size.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from utils.errors import ErrorCode, contract_error, domain_error
from ..interfaces.target_model_interface import Sample, TargetModel

logger = logging.getLogger(__name__)

DECENTERED_CENTER = 0.031
LOG10_MIN_STEP = -4.5


class GaussianMixtureModel(TargetModel):
    """Spike-and-slab mixture; centered (c = 0) or de-centered (c = 0.031)."""

    def __init__(
        self,
        dimension: int = 20,
        spike_width: float = 0.01,
        slab_width: float = 0.1,
        center: float = 0.0,
        spike_weight: float = 100.0,
        half_width: float = 0.5,
    ):
        if dimension < 1:
            raise domain_error("dimension must be positive", param="dimension")
        if not 0.0 < spike_width < slab_width:
            raise domain_error("need 0 < spike_width < slab_width", param="spike_width")
        if not abs(center) < half_width:
            raise domain_error("spike center must lie inside the prior box", param="center")
        self._dimension = dimension
        self.spike_width = spike_width
        self.slab_width = slab_width
        self.center = center
        self.spike_weight = spike_weight
        self.half_width = half_width

        self._log_spike_norm = math.log(spike_weight) - 0.5 * dimension * math.log(2.0 * math.pi * spike_width ** 2)
        self._log_slab_norm = -0.5 * dimension * math.log(2.0 * math.pi * slab_width ** 2)
        self._spike_precision = 0.5 / spike_width ** 2
        self._slab_precision = 0.5 / slab_width ** 2

    @classmethod
    def decentered(cls, **kwargs) -> "GaussianMixtureModel":
        return cls(center=DECENTERED_CENTER, **kwargs)

    @property
    def name(self) -> str:
        return "gaussian_mixture" if self.center == 0.0 else "gaussian_mixture_decentered"

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def evidence(self) -> float:
        """Z, up to the mass of both components outside the box."""
        return self.spike_weight + 1.0

    @property
    def likelihood_max(self) -> Optional[float]:
        return self.likelihood(np.full(self._dimension, self.center))

    def _log_likelihood_rows(self, x: np.ndarray) -> np.ndarray:
        d = x - self.center
        log_spike = self._log_spike_norm - self._spike_precision * np.sum(d * d, axis=-1)
        log_slab = self._log_slab_norm - self._slab_precision * np.sum(x * x, axis=-1)
        return np.logaddexp(log_spike, log_slab)

    def in_box(self, x: np.ndarray) -> bool:
        return bool(np.all(np.abs(x) <= self.half_width))

    def log_likelihood(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self._dimension,):
            raise domain_error(f"expected shape ({self._dimension},), got {x.shape}", param="x")
        if not np.all(np.isfinite(x)):
            raise domain_error("x must be finite", param="x", code=ErrorCode.NON_FINITE_INPUT)
        if not self.in_box(x):
            raise domain_error("x lies outside the prior box", param="x")
        return float(self._log_likelihood_rows(x))

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(self._log_likelihood_rows(np.asarray(xs, dtype=float)))

    def sample_prior_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, size=(n, self._dimension))

    def propose(self, x: np.ndarray, rng: np.random.Generator) -> Tuple[int, float, np.ndarray]:
        """
        Single-coordinate Gaussian proposal.

        The coordinate is uniform over the dimensions and the step size is
        log-uniform on [10^-4.5, 1], drawn by inverse CDF.

        Returns:
            Tuple of (coordinate index, step size, proposed point)
        """
        j = int(rng.integers(self._dimension))
        sigma = 10.0 ** (LOG10_MIN_STEP * (1.0 - rng.random()))
        proposal = x.copy()
        proposal[j] += sigma * rng.standard_normal()
        return j, sigma, proposal

    def accepts(self, proposal: np.ndarray, j: int, threshold: float) -> Tuple[bool, float]:
        """Indicator acceptance: inside the box on coordinate j and L > threshold."""
        if abs(proposal[j]) > self.half_width:
            return False, -math.inf
        log_l = float(self._log_likelihood_rows(proposal))
        if threshold <= 0.0:
            return log_l > -math.inf, log_l
        return log_l > math.log(threshold), log_l

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        if not self.in_box(sample.x):
            raise contract_error("state lies outside the prior box", param="x")
        self.check_constraint(sample, threshold)
        j, _, proposal = self.propose(sample.x, rng)
        accepted, log_l = self.accepts(proposal, j, threshold)
        if not accepted:
            return sample
        return Sample(x=proposal, likelihood=math.exp(log_l), log_likelihood=log_l)
