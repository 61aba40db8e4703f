"""
Nested sampling with deterministic prior-mass shrinkage.

The lowest live particle L_i contributes L_i X / N to Z, the remaining
prior mass shrinks to X = (1 - 1/N)^r after r replacements, and the dead
particle is replaced by a constrained-kernel walk started from a uniformly
chosen survivor. Iteration stops once L_max X <= eps Z, using the model's
known supremum when available and the live maximum otherwise.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config import settings
from models import EstimatorResult
from utils.errors import domain_error
from ..interfaces.estimator_interface import EstimatorInterface
from ..interfaces.target_model_interface import Sample, TargetModel

logger = logging.getLogger(__name__)


@dataclass
class NsState:
    """Live particles, the dead-point ladder and the running evidence."""
    n_particles: int
    mcmc_steps: int
    epsilon: float
    live: List[Sample] = field(default_factory=list)
    live_likelihoods: Optional[np.ndarray] = None
    remaining_mass: float = 1.0
    evidence: float = 0.0
    replacements: int = 0
    ladder: List[float] = field(default_factory=list)
    kernel_applications: int = 0
    rejected_run: int = 0
    stalled: bool = False
    terminated: bool = False
    warnings: List[str] = field(default_factory=list)

    @property
    def shrinkage(self) -> float:
        return 1.0 - 1.0 / self.n_particles

    def log_masses(self) -> np.ndarray:
        """log X_{r-1} for each ladder point, the mass in force when it died."""
        return np.arange(len(self.ladder)) * math.log(self.shrinkage)


def _information(state: NsState) -> float:
    """H = sum p_i log(L_i / Z) over dead points and the terminal live set."""
    if state.evidence <= 0.0:
        return 0.0
    n = state.n_particles
    ladder = np.asarray(state.ladder, dtype=float)
    weights = ladder * np.exp(state.log_masses()) / n
    if state.terminated and state.live_likelihoods is not None:
        ladder = np.concatenate([ladder, state.live_likelihoods])
        weights = np.concatenate([weights, state.live_likelihoods * state.remaining_mass / n])
    keep = weights > 0.0
    p = weights[keep] / state.evidence
    return float(max(np.sum(p * np.log(ladder[keep] / state.evidence)), 0.0))


def _should_continue(state: NsState, likelihood_max: Optional[float]) -> bool:
    top = likelihood_max if likelihood_max is not None else float(state.live_likelihoods.max())
    return top * state.remaining_mass > state.epsilon * state.evidence


def _replace(model: TargetModel, state: NsState, worst: int, patience: int, rng: np.random.Generator) -> None:
    n = state.n_particles
    level = float(state.live_likelihoods[worst])
    j = int(rng.integers(n - 1))
    if j >= worst:
        j += 1
    # ties at the dead level would break the strict constraint
    tied = np.count_nonzero(state.live_likelihoods == level) > 1
    threshold = math.nextafter(level, -math.inf) if tied else level

    sample = state.live[j]
    for _ in range(state.mcmc_steps):
        moved = model.constrained_step(sample, threshold, rng)
        if moved is sample:
            state.rejected_run += 1
        else:
            state.rejected_run = 0
        sample = moved
    state.kernel_applications += state.mcmc_steps

    if state.rejected_run >= patience and not state.stalled:
        state.stalled = True
        message = f"constrained kernel rejected {state.rejected_run} proposals in a row at L={level:.6g}"
        logger.warning(message)
        state.warnings.append(message)
    state.live[worst] = sample
    state.live_likelihoods[worst] = sample.likelihood


def run_nested_sampling(
    model: TargetModel,
    rng: np.random.Generator,
    n_particles: Optional[int] = None,
    mcmc_steps: Optional[int] = None,
    epsilon: Optional[float] = None,
    use_known_max: bool = True,
    patience: Optional[int] = None,
    max_iterations: Optional[int] = None,
) -> NsState:
    """
    Run nested sampling to termination.

    Args:
        model: Target with a constrained kernel
        rng: Random stream
        n_particles: Live set size N >= 2
        mcmc_steps: Kernel applications per replacement
        epsilon: Stopping tolerance on the remaining evidence
        use_known_max: Use the model's L_max in the stopping rule when it has one
        patience: Consecutive rejected kernel steps before a stall warning
        max_iterations: Hard cap on replacements

    Returns:
        Final NsState; the evidence includes the live-set terminal term

    Raises:
        DomainError: If fewer than two particles are requested
    """
    n = n_particles or settings.ns_particles
    if n < 2:
        raise domain_error("nested sampling needs at least two particles", param="n_particles")
    state = NsState(
        n_particles=n,
        mcmc_steps=mcmc_steps or settings.ns_mcmc_steps,
        epsilon=settings.ns_epsilon if epsilon is None else epsilon,
    )
    patience = patience or settings.ns_patience
    max_iterations = max_iterations or settings.ns_max_iterations
    likelihood_max = model.likelihood_max if use_known_max else None

    state.live = [model.evaluate(x) for x in model.sample_prior_batch(n, rng)]
    state.live_likelihoods = np.array([s.likelihood for s in state.live])
    shrinkage = state.shrinkage

    while _should_continue(state, likelihood_max):
        if state.replacements >= max_iterations:
            message = f"stopped after {state.replacements} replacements before the evidence converged"
            logger.warning(message)
            state.warnings.append(message)
            break
        worst = int(np.argmin(state.live_likelihoods))
        level = float(state.live_likelihoods[worst])
        state.evidence += level * state.remaining_mass / n
        state.ladder.append(level)
        _replace(model, state, worst, patience, rng)
        state.replacements += 1
        state.remaining_mass = shrinkage ** state.replacements
        if state.replacements % 10_000 == 0:
            logger.debug(f"NS replacement {state.replacements}: L={level:.6g}, Z={state.evidence:.6g}")

    state.evidence += state.remaining_mass / n * float(state.live_likelihoods.sum())
    state.terminated = True
    logger.info(f"Nested sampling finished after {state.replacements} replacements: Z={state.evidence:.6g}")
    return state


def nested_sampling(
    model: TargetModel,
    rng: np.random.Generator,
    n_particles: Optional[int] = None,
    mcmc_steps: Optional[int] = None,
    epsilon: Optional[float] = None,
    use_known_max: bool = True,
) -> EstimatorResult:
    state = run_nested_sampling(model, rng, n_particles, mcmc_steps, epsilon, use_known_max)
    information = _information(state)
    return EstimatorResult(
        estimator="ns",
        estimate=state.evidence,
        log_estimate=math.log(state.evidence) if state.evidence > 0.0 else None,
        std_error=state.evidence * math.sqrt(information / state.n_particles),
        kernel_applications=state.kernel_applications,
        diagnostics={
            "replacements": state.replacements,
            "remaining_mass": state.remaining_mass,
            "information": information,
            "log_z_error": math.sqrt(information / state.n_particles),
            "ladder_min": state.ladder[0] if state.ladder else None,
            "ladder_max": state.ladder[-1] if state.ladder else None,
        },
        warnings=list(state.warnings),
    )


class NestedSamplingEstimator(EstimatorInterface):
    """Harness adapter for nested sampling."""

    def __init__(self, n_particles: int, mcmc_steps: int, epsilon: float, use_known_max: bool = True):
        self.n_particles = n_particles
        self.mcmc_steps = mcmc_steps
        self.epsilon = epsilon
        self.use_known_max = use_known_max

    @property
    def name(self) -> str:
        return "ns"

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        return nested_sampling(model, rng, self.n_particles, self.mcmc_steps, self.epsilon, self.use_known_max)
