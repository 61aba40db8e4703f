"""Crude Monte Carlo: the fraction of prior draws with L > gamma."""

import logging
import math
from typing import Optional

import numpy as np

from config import settings
from models import EstimatorResult
from utils.numerics import iter_chunks
from ..interfaces.estimator_interface import EstimatorInterface
from ..interfaces.target_model_interface import TargetModel

logger = logging.getLogger(__name__)


def cmc_estimate(
    model: TargetModel,
    gamma: float,
    n: int,
    rng: np.random.Generator,
    chunk_size: Optional[int] = None,
) -> EstimatorResult:
    """
    Estimate P(L > gamma) from n independent prior draws.

    Draws are generated in chunks so memory stays bounded for large n.

    Returns:
        EstimatorResult with the hit fraction and its binomial standard error
    """
    chunk_size = chunk_size or settings.batch_chunk_size
    hits = 0
    for size in iter_chunks(n, chunk_size):
        xs = model.sample_prior_batch(size, rng)
        hits += int(np.count_nonzero(model.likelihood_batch(xs) > gamma))
    p = hits / n
    return EstimatorResult(
        estimator="cmc",
        estimate=p,
        log_estimate=math.log(p) if p > 0.0 else None,
        std_error=math.sqrt(p * (1.0 - p) / n),
        kernel_applications=n,
        schedule=[gamma],
        diagnostics={"hits": hits},
    )


class CrudeMonteCarloEstimator(EstimatorInterface):
    """Harness adapter for crude Monte Carlo."""

    def __init__(self, gamma: float, n: int):
        self.gamma = gamma
        self.n = n

    @property
    def name(self) -> str:
        return "cmc"

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        return cmc_estimate(model, self.gamma, self.n, rng)
