"""Target models: prior, likelihood and constrained kernel."""

from .shortest_path import ShortestPathModel, gibbs_conditional_sweep, shortest_path_length
from .gaussian_mixture import GaussianMixtureModel
from .toy_models import (
    ConstantLikelihoodModel,
    ExponentialLikelihoodToyModel,
    ExponentialPriorToyModel,
    SpikeToyModel,
    UniformToyModel,
)

__all__ = [
    "ShortestPathModel",
    "gibbs_conditional_sweep",
    "shortest_path_length",
    "GaussianMixtureModel",
    "ConstantLikelihoodModel",
    "ExponentialLikelihoodToyModel",
    "ExponentialPriorToyModel",
    "SpikeToyModel",
    "UniformToyModel",
]
