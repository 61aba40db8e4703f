"""
Multilevel splitting product estimator.

Each stage keeps the samples above the stage's (1 - rho)-quantile as seeds,
grows them back to a full stage with constrained-kernel chains, and the
estimate is rho^(T-1) times the fraction of the last stage above gamma.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from models import EstimatorResult
from utils.errors import ErrorCode, stage_failure_error
from utils.numerics import upper_quantile
from ..interfaces.estimator_interface import EstimatorInterface
from ..interfaces.target_model_interface import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_MAX_STAGES = 200


def expected_stages(probability: float, rho: float) -> int:
    """Stages needed to reach a target probability with ratio rho per stage."""
    return max(int(math.ceil(math.log(probability) / math.log(rho))), 1)


def grow_population(
    model: TargetModel,
    seeds: np.ndarray,
    threshold: float,
    size: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Run one constrained chain per seed until the population reaches size.

    Returns:
        Tuple of (points, likelihoods, kernel applications)
    """
    steps = int(math.ceil(size / seeds.shape[0]))
    current = seeds
    points, likelihoods = [], []
    for _ in range(steps):
        current, lik = model.constrained_batch(current, threshold, rng)
        points.append(current)
        likelihoods.append(lik)
    return np.concatenate(points)[:size], np.concatenate(likelihoods)[:size], steps * seeds.shape[0]


def product_estimate(
    model: TargetModel,
    gamma: float,
    stage_size: int,
    rng: np.random.Generator,
    rho: float = math.exp(-1.0),
    max_stages: int = DEFAULT_MAX_STAGES,
) -> EstimatorResult:
    """
    Estimate P(L > gamma) as a product of per-stage exceedance fractions.

    Args:
        model: Target with a constrained kernel
        gamma: Rare-event threshold
        stage_size: Samples per stage, N_0
        rng: Random stream
        rho: Target fraction kept at each stage

    Raises:
        StageFailureError: If a stage quantile fails to increase or no seed survives
    """
    xs = model.sample_prior_batch(stage_size, rng)
    likelihoods = model.likelihood_batch(xs)
    applications = stage_size
    thresholds: List[float] = [0.0]

    for _ in range(max_stages):
        level = upper_quantile(likelihoods, rho)
        if level >= gamma:
            stages = len(thresholds)
            fraction = float(np.mean(likelihoods > gamma))
            estimate = rho ** (stages - 1) * fraction
            logger.debug(f"Product estimator finished after {stages} stages")
            return EstimatorResult(
                estimator="cpp",
                estimate=estimate,
                log_estimate=math.log(estimate) if estimate > 0.0 else None,
                kernel_applications=applications,
                schedule=thresholds[1:] + [gamma],
                diagnostics={"stages": stages, "stage_size": stage_size, "last_fraction": fraction},
            )
        if level <= thresholds[-1]:
            raise stage_failure_error(f"stage quantile stalled at {level:.6g}", param="rho",
                                      code=ErrorCode.DEGENERATE_QUANTILE)
        seeds = xs[likelihoods > level]
        if seeds.shape[0] == 0:
            raise stage_failure_error(f"no samples above stage level {level:.6g}", param="stage_size")
        thresholds.append(level)
        xs, likelihoods, used = grow_population(model, seeds, level, stage_size, rng)
        applications += used

    raise stage_failure_error(f"threshold {gamma:g} not reached within {max_stages} stages", param="gamma")


class ProductEstimator(EstimatorInterface):
    """Harness adapter; the stage size defaults to N split over the expected stages."""

    def __init__(self, gamma: float, n: int, rho: float, stage_size: Optional[int] = None,
                 reference: Optional[float] = None):
        self.gamma = gamma
        self.rho = rho
        if stage_size is None:
            stages = expected_stages(reference, rho) if reference else 1
            stage_size = max(n // stages, 2)
        self.stage_size = stage_size

    @property
    def name(self) -> str:
        return "cpp"

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        return product_estimate(model, self.gamma, self.stage_size, rng, rho=self.rho)
