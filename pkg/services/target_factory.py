"""
Factory for creating target model instances.

Maps the ModelType named in an experiment configuration to a TargetModel,
importing model modules lazily.
"""

import logging

from models import ModelType
from .interfaces.target_model_interface import TargetModel

logger = logging.getLogger(__name__)


class TargetFactory:
    """Factory for creating target models."""

    @staticmethod
    def create_model(model_type: ModelType, decentered: bool = False) -> TargetModel:
        """
        Create a target model.

        Args:
            model_type: Model to build
            decentered: Shift the mixture spike off the slab center

        Returns:
            TargetModel implementation

        Raises:
            ValueError: If the model type is not supported
        """
        if model_type == ModelType.SHORTEST_PATH:
            from .targets.shortest_path import ShortestPathModel
            return ShortestPathModel()

        elif model_type == ModelType.GAUSSIAN_MIXTURE:
            from .targets.gaussian_mixture import GaussianMixtureModel
            return GaussianMixtureModel.decentered() if decentered else GaussianMixtureModel()

        elif model_type == ModelType.UNIFORM_TOY:
            from .targets.toy_models import UniformToyModel
            return UniformToyModel()

        elif model_type == ModelType.EXPONENTIAL_TOY:
            from .targets.toy_models import ExponentialLikelihoodToyModel
            return ExponentialLikelihoodToyModel()

        else:
            raise ValueError(f"Unsupported model type: {model_type}")
