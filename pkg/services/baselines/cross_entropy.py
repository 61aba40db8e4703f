"""
Cross-entropy importance sampling for the shortest path model.

The proposal stays in the prior's exponential family; each pilot stage sets
the next scales to the likelihood-ratio weighted mean of the elite samples,
and the final stage spends the rest of the budget on importance sampling.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import settings
from models import EstimatorResult
from utils.errors import ErrorCode, config_error, stage_failure_error
from utils.numerics import iter_chunks, upper_quantile
from ..interfaces.estimator_interface import EstimatorInterface
from ..interfaces.target_model_interface import TargetModel
from ..targets.shortest_path import ShortestPathModel, path_lengths

logger = logging.getLogger(__name__)


@dataclass
class CeParams:
    """Cross-entropy run parameters and the scale path v_0 = u, v_1, ..."""
    reference: np.ndarray
    gamma: float
    rho: float = 0.1
    pilot_size: int = 1_000
    smoothing: float = 1.0
    max_stages: int = 100
    scales: List[np.ndarray] = field(default_factory=list)
    levels: List[float] = field(default_factory=list)

    @property
    def current(self) -> np.ndarray:
        return self.scales[-1] if self.scales else self.reference


def log_likelihood_ratio(xs: np.ndarray, reference: np.ndarray, proposal: np.ndarray) -> np.ndarray:
    """log w(x) = sum_j log(v_j / u_j) - x_j (1/u_j - 1/v_j) for prior scales u and proposal scales v."""
    return np.sum(np.log(proposal / reference) - xs * (1.0 / reference - 1.0 / proposal), axis=-1)


def ce_update(xs: np.ndarray, scores: np.ndarray, level: float,
              reference: np.ndarray, proposal: np.ndarray) -> np.ndarray:
    """
    Next proposal scales: sum I(S > level) w x / sum I(S > level) w.

    Raises:
        StageFailureError: If no sample exceeds the level
    """
    elite = scores > level
    if not elite.any():
        raise stage_failure_error(f"no pilot sample above level {level:.6g}", param="pilot_size")
    log_w = log_likelihood_ratio(xs[elite], reference, proposal)
    w = np.exp(log_w - log_w.max())
    return (w[:, None] * xs[elite]).sum(axis=0) / w.sum()


def ce_final_estimate(
    reference: np.ndarray,
    proposal: np.ndarray,
    gamma: float,
    n: int,
    rng: np.random.Generator,
    chunk_size: Optional[int] = None,
) -> Tuple[float, float, float]:
    """
    Importance-sampling estimate of P(S > gamma) under Exp(proposal).

    Returns:
        Tuple of (estimate, standard error, effective sample size of the hits)
    """
    chunk_size = chunk_size or settings.batch_chunk_size
    total = 0.0
    total_sq = 0.0
    for size in iter_chunks(n, chunk_size):
        xs = rng.standard_exponential(size=(size, 5)) * proposal
        hit = path_lengths(xs) > gamma
        w = np.exp(log_likelihood_ratio(xs[hit], reference, proposal))
        total += float(w.sum())
        total_sq += float(np.sum(w * w))
    estimate = total / n
    variance = max(total_sq / n - estimate ** 2, 0.0)
    ess = total ** 2 / total_sq if total_sq > 0.0 else 0.0
    return estimate, math.sqrt(variance / n), ess


def cross_entropy_estimate(
    model: ShortestPathModel,
    gamma: float,
    n: int,
    rng: np.random.Generator,
    rho: Optional[float] = None,
    pilot_size: Optional[int] = None,
    smoothing: Optional[float] = None,
    max_stages: Optional[int] = None,
) -> EstimatorResult:
    """
    Adaptive cross-entropy estimate of P(S > gamma).

    The pilot stages consume T * N_0 draws; the final stage uses N_1 = N - T * N_0.

    Raises:
        ConfigError: If the pilot stages leave no budget for the final stage
        StageFailureError: If a pilot stage has no elite samples
    """
    params = CeParams(
        reference=model.scales,
        gamma=gamma,
        rho=settings.ce_rho if rho is None else rho,
        pilot_size=pilot_size or settings.ce_pilot_size,
        smoothing=settings.ce_smoothing if smoothing is None else smoothing,
        max_stages=max_stages or settings.ce_max_stages,
    )
    warnings: List[str] = []

    reached = False
    while not reached:
        if len(params.levels) >= params.max_stages:
            raise stage_failure_error(f"threshold {gamma:g} not reached in {params.max_stages} stages",
                                      param="max_stages")
        proposal = params.current
        xs = rng.standard_exponential(size=(params.pilot_size, 5)) * proposal
        scores = path_lengths(xs)
        level = upper_quantile(scores, params.rho)
        reached = level >= gamma
        level = min(level, gamma)
        updated = ce_update(xs, scores, level, params.reference, proposal)
        params.scales.append(params.smoothing * updated + (1.0 - params.smoothing) * proposal)
        params.levels.append(level)
        logger.debug(f"CE stage {len(params.levels)}: level={level:.6g}, v={params.current}")

    stages = len(params.levels)
    final_size = n - stages * params.pilot_size
    if final_size <= 0:
        raise config_error(
            f"{stages} pilot stages of {params.pilot_size} exhaust the budget N={n}",
            param="n", code=ErrorCode.INFEASIBLE_BUDGET,
        )

    estimate, std_error, ess = ce_final_estimate(params.reference, params.current, gamma, final_size, rng)
    if ess < settings.ce_min_effective_sample_size:
        message = f"effective sample size {ess:.1f} of the final stage is low"
        logger.warning(message)
        warnings.append(message)

    return EstimatorResult(
        estimator="ce",
        estimate=estimate,
        log_estimate=math.log(estimate) if estimate > 0.0 else None,
        std_error=std_error,
        kernel_applications=n,
        schedule=params.levels,
        diagnostics={
            "stages": stages,
            "final_size": final_size,
            "scales": params.current.tolist(),
            "effective_sample_size": ess,
        },
        warnings=warnings,
    )


class CrossEntropyEstimator(EstimatorInterface):
    """Harness adapter for cross-entropy importance sampling."""

    def __init__(self, gamma: float, n: int, rho: float, pilot_size: int, smoothing: float = 1.0):
        self.gamma = gamma
        self.n = n
        self.rho = rho
        self.pilot_size = pilot_size
        self.smoothing = smoothing

    @property
    def name(self) -> str:
        return "ce"

    def supports(self, model: TargetModel) -> bool:
        return isinstance(model, ShortestPathModel)

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        if not self.supports(model):
            raise config_error("cross-entropy needs the shortest path model", param="model",
                               code=ErrorCode.INCOMPATIBLE_ESTIMATOR)
        return cross_entropy_estimate(model, self.gamma, self.n, rng, rho=self.rho,
                                      pilot_size=self.pilot_size, smoothing=self.smoothing)
