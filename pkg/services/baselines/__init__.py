"""Comparison estimators: crude MC, product splitting, cross-entropy, nested and diffuse nested sampling."""

from .crude_monte_carlo import CrudeMonteCarloEstimator, cmc_estimate
from .product_estimator import ProductEstimator, product_estimate
from .cross_entropy import CeParams, CrossEntropyEstimator, cross_entropy_estimate
from .nested_sampling import NestedSamplingEstimator, NsState, nested_sampling, run_nested_sampling
from .diffuse_nested_sampling import DiffuseNestedSamplingEstimator, diffuse_nested_sampling

__all__ = [
    "CrudeMonteCarloEstimator",
    "cmc_estimate",
    "ProductEstimator",
    "product_estimate",
    "CeParams",
    "CrossEntropyEstimator",
    "cross_entropy_estimate",
    "NestedSamplingEstimator",
    "NsState",
    "nested_sampling",
    "run_nested_sampling",
    "DiffuseNestedSamplingEstimator",
    "diffuse_nested_sampling",
]
