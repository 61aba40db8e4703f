"""
Factory for creating estimator instances.

Maps the EstimatorType of an experiment configuration to an
EstimatorInterface carrying that configuration's parameters.
"""

import logging
from typing import Optional

from models import EstimatorType, ExperimentConfig
from .interfaces.estimator_interface import EstimatorInterface

logger = logging.getLogger(__name__)


class EstimatorFactory:
    """Factory for creating estimators."""

    @staticmethod
    def create_estimator(cfg: ExperimentConfig, reference: Optional[float] = None) -> EstimatorInterface:
        """
        Create an estimator for an experiment.

        Args:
            cfg: Validated experiment configuration
            reference: Known Z(gamma), used to size product-estimator stages

        Returns:
            EstimatorInterface implementation

        Raises:
            ValueError: If the estimator type is not supported
        """
        estimator = cfg.estimator
        if estimator == EstimatorType.CMC:
            from .baselines.crude_monte_carlo import CrudeMonteCarloEstimator
            return CrudeMonteCarloEstimator(cfg.gamma, cfg.n)

        elif estimator == EstimatorType.CPP:
            from .baselines.product_estimator import ProductEstimator
            return ProductEstimator(cfg.gamma, cfg.n, cfg.resolved_rho,
                                    stage_size=cfg.cpp_stage_size, reference=reference)

        elif estimator == EstimatorType.CE:
            from .baselines.cross_entropy import CrossEntropyEstimator
            return CrossEntropyEstimator(cfg.gamma, cfg.n, cfg.resolved_rho, cfg.ce_pilot_size,
                                         smoothing=cfg.ce_smoothing)

        elif estimator == EstimatorType.SS:
            from .split_sampler import SplitSamplingEstimator
            return SplitSamplingEstimator(cfg.to_split_config())

        elif estimator == EstimatorType.NS:
            from .baselines.nested_sampling import NestedSamplingEstimator
            return NestedSamplingEstimator(cfg.n_particles, cfg.mcmc_steps, cfg.epsilon,
                                           use_known_max=cfg.known_max_likelihood)

        elif estimator == EstimatorType.DNS:
            from .baselines.diffuse_nested_sampling import DiffuseNestedSamplingEstimator
            return DiffuseNestedSamplingEstimator(cfg.n, cfg.dns_kappa, cfg.resolved_rho,
                                                  cfg.dns_level_interval, cfg.dns_max_levels,
                                                  kernel_steps=cfg.kernel_steps)

        else:
            raise ValueError(f"Unsupported estimator type: {estimator}")
