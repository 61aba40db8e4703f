"""
Abstract interface for target models.

A target model couples a prior pi(x) with a likelihood L(x) >= 0 and a
constrained MCMC kernel leaving pi(x | L(x) > m) invariant. Every sampler in
the package (split sampling, nested sampling, the multilevel baselines) talks
to the model only through this contract.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
import math
from typing import Optional, Tuple

import numpy as np

from utils.errors import contract_error


@dataclass(frozen=True, eq=False)
class Sample:
    """A point of the parameter space with its cached likelihood."""
    x: np.ndarray
    likelihood: float
    log_likelihood: float


class TargetModel(ABC):
    """Abstract interface for prior/likelihood pairs with a constrained kernel."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Model identifier used in reports."""
        pass

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Dimension of x."""
        pass

    @property
    def likelihood_max(self) -> Optional[float]:
        """Known supremum of L, or None."""
        return None

    @abstractmethod
    def log_likelihood(self, x: np.ndarray) -> float:
        """
        Evaluate log L(x).

        Args:
            x: Point in the prior's support

        Returns:
            Natural log of the likelihood, -inf where L(x) = 0

        Raises:
            DomainError: If x is non-finite or outside the support
        """
        pass

    @abstractmethod
    def sample_prior_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draw n independent prior points.

        Args:
            n: Number of draws
            rng: Random stream

        Returns:
            Array of shape (n, dimension)
        """
        pass

    @abstractmethod
    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised L over the rows of xs."""
        pass

    @abstractmethod
    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        """
        Apply one kernel step targeting pi(x | L(x) > threshold).

        Args:
            sample: Current state, must satisfy L > threshold
            threshold: Likelihood level m >= 0
            rng: Random stream

        Returns:
            New state satisfying L > threshold

        Raises:
            ContractError: If the entry state violates the constraint
        """
        pass

    def likelihood(self, x: np.ndarray) -> float:
        return math.exp(self.log_likelihood(x))

    def evaluate(self, x: np.ndarray) -> Sample:
        """Wrap x into a Sample whose cached values come from one evaluation."""
        x = np.asarray(x, dtype=float)
        log_l = self.log_likelihood(x)
        return Sample(x=x, likelihood=math.exp(log_l), log_likelihood=log_l)

    def sample_prior(self, rng: np.random.Generator) -> Sample:
        return self.evaluate(self.sample_prior_batch(1, rng)[0])

    def exceeds(self, sample: Sample, threshold: float) -> bool:
        """Strict constraint L(x) > threshold; threshold 0 admits every x with L > 0."""
        if threshold <= 0.0:
            return sample.log_likelihood > -math.inf
        return sample.likelihood > threshold

    def check_constraint(self, sample: Sample, threshold: float) -> None:
        if not self.exceeds(sample, threshold):
            raise contract_error(
                f"state with L={sample.likelihood:.6g} does not exceed threshold {threshold:.6g}",
                param="threshold",
            )

    def constrained_steps(self, sample: Sample, threshold: float, rng: np.random.Generator,
                          steps: int = 1) -> Sample:
        for _ in range(steps):
            sample = self.constrained_step(sample, threshold, rng)
        return sample

    def constrained_batch(
        self,
        xs: np.ndarray,
        threshold: float,
        rng: np.random.Generator,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        One kernel step applied to every row of xs.

        Models with a vectorised kernel override this; the default loops over rows.

        Returns:
            Tuple of (new points, their likelihoods)
        """
        out = np.empty_like(xs, dtype=float)
        lik = np.empty(xs.shape[0])
        for i, row in enumerate(xs):
            step = self.constrained_step(self.evaluate(row), threshold, rng)
            out[i] = step.x
            lik[i] = step.likelihood
        return out, lik
