"""
Diffuse nested sampling.

One chain moves over (x, j): x is moved by the constrained kernel at level
l_j and the index j takes a +-1 random-walk step targeting the mixture
sum_j w_j pi(x | L > l_j) with w_j proportional to exp(kappa (j - J)).
A new level is placed at the (1 - rho)-quantile of the likelihoods seen
above the current top once enough of them have been buffered.

During the run the level masses are the nominal X_j = rho^j. Afterwards
they are refined from exceedance counts, r_j = (n_exceed + C rho) / (n_visit + C),
with C a pseudo-count, and Z is assembled band by band like nested sampling:
the prior mass X_j - X_{j+1} of each band times the mean likelihood of the
chain points falling in it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from config import settings
from models import EstimatorResult
from utils.errors import domain_error
from utils.numerics import upper_quantile
from ..interfaces.estimator_interface import EstimatorInterface
from ..interfaces.target_model_interface import TargetModel

logger = logging.getLogger(__name__)


@dataclass
class DnsState:
    """Levels, per-level counters and the recorded chain."""
    levels: List[float] = field(default_factory=lambda: [0.0])
    visits: List[int] = field(default_factory=lambda: [0])
    exceedances: List[int] = field(default_factory=lambda: [0])
    buffer: List[float] = field(default_factory=list)
    likelihoods: List[float] = field(default_factory=list)
    indices: List[int] = field(default_factory=list)
    rejected_run: int = 0
    stalled: bool = False
    warnings: List[str] = field(default_factory=list)

    @property
    def top(self) -> int:
        return len(self.levels) - 1


def refine_log_masses(state: DnsState, rho: float, pseudocount: float) -> np.ndarray:
    """log X_j from exceedance counts, shrunk toward the nominal ratio rho."""
    log_x = np.zeros(len(state.levels))
    for j in range(state.top):
        ratio = (state.exceedances[j] + pseudocount * rho) / (state.visits[j] + pseudocount)
        log_x[j + 1] = log_x[j] + math.log(ratio)
    return log_x


def assemble_evidence(levels: np.ndarray, log_x: np.ndarray, likelihoods: np.ndarray) -> float:
    """
    Z = sum_j (X_j - X_{j+1}) mean(L in (l_j, l_{j+1}]) + X_J mean(L > l_J).

    An empty band uses its midpoint, an empty top band uses l_J.
    """
    top = levels.size - 1
    bands = np.searchsorted(levels, likelihoods, side="left") - 1
    keep = bands >= 0
    sums = np.bincount(bands[keep], weights=likelihoods[keep], minlength=top + 1)
    counts = np.bincount(bands[keep], minlength=top + 1)

    means = np.empty(top + 1)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]
    for j in np.flatnonzero(~filled):
        means[j] = 0.5 * (levels[j] + levels[j + 1]) if j < top else levels[top]

    x = np.exp(log_x)
    band_mass = np.append(x[:-1] - x[1:], x[-1])
    return float(np.sum(band_mass * means))


def diffuse_nested_sampling(
    model: TargetModel,
    rng: np.random.Generator,
    n: int,
    kappa: Optional[float] = None,
    rho: float = math.exp(-1.0),
    level_interval: Optional[int] = None,
    max_levels: Optional[int] = None,
    kernel_steps: int = 1,
    pseudocount: Optional[float] = None,
    patience: Optional[int] = None,
) -> EstimatorResult:
    """
    Run the diffuse nested sampling chain for n iterations.

    Args:
        model: Target with a constrained kernel
        rng: Random stream
        n: Chain length
        kappa: Level-weight exponent, kappa > 0
        rho: Nominal mass ratio between consecutive levels
        level_interval: Buffered likelihoods above the top needed for a new level
        max_levels: Cap on the number of levels above the root
        kernel_steps: Kernel applications per iteration

    Raises:
        DomainError: If kappa is not positive
    """
    kappa = settings.dns_kappa if kappa is None else kappa
    if not kappa > 0.0:
        raise domain_error("kappa must be positive", param="kappa")
    level_interval = level_interval or settings.dns_level_interval
    max_levels = max_levels or settings.dns_max_levels
    pseudocount = settings.dns_mass_pseudocount if pseudocount is None else pseudocount
    patience = patience or settings.ns_patience
    log_rho = math.log(rho)

    state = DnsState()
    sample = model.sample_prior(rng)
    j = 0

    for _ in range(n):
        for _ in range(kernel_steps):
            moved = model.constrained_step(sample, state.levels[j], rng)
            state.rejected_run = state.rejected_run + 1 if moved is sample else 0
            sample = moved
        if state.rejected_run >= patience and not state.stalled:
            state.stalled = True
            message = f"constrained kernel rejected {state.rejected_run} proposals in a row at level {j}"
            logger.warning(message)
            state.warnings.append(message)

        likelihood = sample.likelihood
        state.likelihoods.append(likelihood)
        state.indices.append(j)
        if j < state.top:
            state.visits[j] += 1
            if likelihood > state.levels[j + 1]:
                state.exceedances[j] += 1
        if likelihood > state.levels[-1] and state.top < max_levels:
            state.buffer.append(likelihood)

        proposal = j + (1 if rng.random() < 0.5 else -1)
        if 0 <= proposal <= state.top and model.exceeds(sample, state.levels[proposal]):
            # log X_j - log X_j' with nominal masses rho^j
            log_ratio = (kappa - log_rho) * (proposal - j)
            if log_ratio >= 0.0 or rng.random() < math.exp(log_ratio):
                j = proposal

        if len(state.buffer) >= level_interval:
            new_level = upper_quantile(state.buffer, rho)
            state.levels.append(new_level)
            state.visits.append(0)
            state.exceedances.append(0)
            state.buffer = [v for v in state.buffer if v > new_level]
            logger.debug(f"DNS level {state.top}: l={new_level:.6g}")

    levels = np.asarray(state.levels)
    log_x = refine_log_masses(state, rho, pseudocount)
    evidence = assemble_evidence(levels, log_x, np.asarray(state.likelihoods))
    logger.info(f"Diffuse nested sampling finished with {state.top} levels: Z={evidence:.6g}")

    return EstimatorResult(
        estimator="dns",
        estimate=evidence,
        log_estimate=math.log(evidence) if evidence > 0.0 else None,
        kernel_applications=n * kernel_steps,
        schedule=state.levels[1:],
        diagnostics={
            "levels": state.top,
            "log_masses": log_x.tolist(),
            "level_visits": np.bincount(np.asarray(state.indices, dtype=np.int64),
                                        minlength=state.top + 1).tolist(),
        },
        warnings=list(state.warnings),
    )


class DiffuseNestedSamplingEstimator(EstimatorInterface):
    """Harness adapter for diffuse nested sampling."""

    def __init__(self, n: int, kappa: float, rho: float, level_interval: int, max_levels: int,
                 kernel_steps: int = 1):
        self.n = n
        self.kappa = kappa
        self.rho = rho
        self.level_interval = level_interval
        self.max_levels = max_levels
        self.kernel_steps = kernel_steps

    @property
    def name(self) -> str:
        return "dns"

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        return diffuse_nested_sampling(
            model, rng, self.n // self.kernel_steps, kappa=self.kappa, rho=self.rho,
            level_interval=self.level_interval, max_levels=self.max_levels,
            kernel_steps=self.kernel_steps,
        )
