"""
Interfaces for target models and estimators.

Target models expose prior draws, likelihoods and a constrained kernel;
estimators consume a model and a random stream and return an EstimatorResult.
"""

from .target_model_interface import Sample, TargetModel
from .estimator_interface import EstimatorInterface

__all__ = [
    "Sample",
    "TargetModel",
    "EstimatorInterface"
]
