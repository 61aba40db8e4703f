"""
Abstract interface for Z estimators.

Rare-event estimators return Z(gamma) = P(L > gamma); evidence estimators
return Z = E_pi[L]. Both report through the same EstimatorResult.
"""

from abc import ABC, abstractmethod

import numpy as np

from models import EstimatorResult
from .target_model_interface import TargetModel


class EstimatorInterface(ABC):
    """Abstract interface for estimators run by the replicate harness."""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        """
        Run the estimator once.

        Args:
            model: Target model
            rng: Random stream owned by this run

        Returns:
            EstimatorResult with the point estimate and diagnostics
        """
        pass

    def supports(self, model: TargetModel) -> bool:
        """Whether the estimator can run on this model."""
        return True
