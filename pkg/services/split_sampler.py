"""
Split sampling: a Markov chain on (x, m) with invariant density
proportional to omega(m) I(L(x) > m) pi(x).

Each iteration moves x with the model's constrained kernel at the current
level m, then redraws m from omega(m) I(m < L(x)) / Omega(L(x)) by inverting
Omega. Levels are built by repeated quantile splitting with boosted weights;
estimation then adapts Omega_t = 1 / Z_t from Rao-Blackwellised visit masses.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import logsumexp

from models import AdaptationStrategy, EstimatorResult, SplitConfig, TraceRow, WeightMode
from utils.errors import ErrorCode, construction_error, empty_batch_error, level_budget_error
from utils.numerics import log_expm1, upper_quantile
from .interfaces.estimator_interface import EstimatorInterface
from .interfaces.target_model_interface import Sample, TargetModel
from .weight_adaptation import flat_histogram_update, rebalance_weights, step_size
from .weight_function import CumulativeWeight, LevelGrid, build_cumulative

logger = logging.getLogger(__name__)


@dataclass
class SplitChainState:
    """Current (x, m) of the joint chain and its counters."""
    sample: Sample
    threshold: float = 0.0
    level: int = 0
    iterations: int = 0
    kernel_applications: int = 0
    max_likelihood: float = 0.0


@dataclass
class SampleBatch:
    """Chain output: L_i, the level drawn after it, and log Omega(L_i) under the weight then in force."""
    likelihoods: np.ndarray
    thresholds: np.ndarray
    levels: np.ndarray
    log_omega: np.ndarray
    weight: Optional[CumulativeWeight] = None

    @property
    def size(self) -> int:
        return int(self.likelihoods.size)


@dataclass
class SplitResult:
    """Outcome of level construction plus estimation."""
    grid: LevelGrid
    estimate: float
    log_estimate: float
    evidence: float
    gamma: Optional[float]
    kernel_applications: int
    construction_iterations: int
    estimation_iterations: int
    visits: np.ndarray
    trace: List[TraceRow] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def curve(self):
        """(m_t, Z_hat(m_t)) pairs."""
        return self.grid.thresholds.copy(), self.grid.estimates

    def to_estimator_result(self, name: str = "ss") -> EstimatorResult:
        return EstimatorResult(
            estimator=name,
            estimate=self.estimate,
            log_estimate=self.log_estimate,
            kernel_applications=self.kernel_applications,
            schedule=self.grid.thresholds.tolist(),
            diagnostics={
                "levels": self.grid.level_count,
                "construction_iterations": self.construction_iterations,
                "estimation_iterations": self.estimation_iterations,
                "evidence_integral": self.evidence,
                "tail_integral": self.grid.tail_integral,
                "log_level_estimates": self.grid.log_estimates.tolist(),
                "level_visits": self.visits.tolist(),
            },
            warnings=list(self.warnings),
        )


def sample_level(likelihood: float, weight: CumulativeWeight, rng: np.random.Generator) -> float:
    """
    Draw m from omega(m) I(m < L) / Omega(L).

    U ~ Uniform(0, Omega(L)) and m = Omega^-1(U), with m = 0 when U <= Omega_0.
    In discrete mode the result is a knot.
    """
    log_top = weight.log_evaluate_below(likelihood)
    if log_top == -math.inf:
        return 0.0
    u = rng.random()
    if u == 0.0:
        return 0.0
    m = weight.log_invert(log_top + math.log(u))
    if m >= likelihood and weight.mode != WeightMode.DISCRETE:
        m = math.nextafter(likelihood, -math.inf)
    return m


def integrate_level_estimates(grid: LevelGrid) -> float:
    """
    Integral of the piecewise log-linear interpolation of Z_hat(m), plus the tail term.

    Each segment contributes (Z_t - Z_{t-1}) (m_t - m_{t-1}) / (log Z_t - log Z_{t-1}),
    or Z_t (m_t - m_{t-1}) where the estimate is flat.

    Raises:
        ConstructionError: If some level estimate is not positive
    """
    log_z = np.asarray(grid.log_estimates, dtype=float)
    if not np.all(np.isfinite(log_z)):
        raise construction_error("level estimates must be positive", param="log_estimates",
                                 code=ErrorCode.NONPOSITIVE_ESTIMATE)
    if grid.level_count == 0:
        return float(grid.tail_integral)
    widths = np.diff(np.asarray(grid.thresholds, dtype=float))
    slopes = np.diff(log_z)
    factor = np.ones_like(slopes)
    nonflat = slopes != 0.0
    factor[nonflat] = np.expm1(slopes[nonflat]) / slopes[nonflat]
    return float(np.sum(np.exp(log_z[:-1]) * factor * widths) + grid.tail_integral)


class SplitSampler:
    """Joint (x, m) chain with level construction and self-balancing estimation."""

    def __init__(self, model: TargetModel, config: SplitConfig, rng: np.random.Generator,
                 state: Optional[SplitChainState] = None):
        self.model = model
        self.config = config
        self.rng = rng
        self.state = state or SplitChainState(sample=model.sample_prior(rng))
        self.state.max_likelihood = max(self.state.max_likelihood, self.state.sample.likelihood)
        self.trace: List[TraceRow] = []
        self.warnings: List[str] = []
        self.construction_iterations = 0

    def _x_move(self) -> float:
        steps = self.config.kernel_steps
        self.state.sample = self.model.constrained_steps(self.state.sample, self.state.threshold, self.rng, steps)
        self.state.kernel_applications += steps
        likelihood = self.state.sample.likelihood
        if likelihood > self.state.max_likelihood:
            self.state.max_likelihood = likelihood
        return likelihood

    def _m_move(self, weight: CumulativeWeight) -> None:
        self.state.threshold = sample_level(self.state.sample.likelihood, weight, self.rng)
        self.state.level = weight.level_of(self.state.threshold)

    def _advance(self, weight: CumulativeWeight) -> None:
        self.state.iterations += 1
        every = self.config.trace_every
        if every and self.state.iterations % every == 0:
            level = self.state.level
            self.trace.append(TraceRow(
                iteration=self.state.iterations,
                level=level,
                log_omega=float(weight.log_omega[level]),
            ))

    def _warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def _budget_left(self) -> Optional[int]:
        if self.config.budget is None:
            return None
        return self.config.budget - self.state.kernel_applications

    def _boosted_log_weights(self, grid: LevelGrid, top: int) -> np.ndarray:
        """log Omega_0..Omega_top for the grid about to gain level `top`."""
        cfg = self.config
        log_rho = math.log(cfg.rho)
        boost = cfg.boost
        log_weights = grid.log_weights.copy()
        log_z_top = top * log_rho
        if cfg.beta is not None:
            below = top - 1
            log_weights[below] = boost * below - below * log_rho
            if boost > 0.0:
                log_sum = log_expm1(boost * top) - log_expm1(boost)
            else:
                log_sum = math.log(top)
            log_top = math.log(cfg.beta) + log_sum - log_z_top
        else:
            log_top = boost * top - log_z_top
        return np.maximum.accumulate(np.append(log_weights, log_top))

    def _add_level(self, grid: LevelGrid, threshold: float) -> None:
        top = grid.level_count + 1
        log_weights = self._boosted_log_weights(grid, top)
        grid.log_weights = log_weights[:-1]
        grid.append_level(threshold, top * math.log(self.config.rho), float(log_weights[-1]))

    def _tail_negligible(self, grid: LevelGrid) -> bool:
        """Z_T (L_max - m_T) against the integral so far; L_max falls back to the largest L seen."""
        upper = self.state.max_likelihood
        known = self.model.likelihood_max
        if known is not None:
            upper = max(upper, known)
        excess = upper - grid.top_threshold
        if excess <= 0.0:
            return True
        bound = math.exp(grid.log_estimates[-1]) * excess
        return bound < self.config.tail_tolerance * integrate_level_estimates(grid)

    def _construction_limit(self) -> Optional[int]:
        if self.config.budget is None:
            return None
        return int(self.config.budget * (1.0 - self.config.estimation_share))

    def build_levels(self) -> LevelGrid:
        """
        Place levels by quantile splitting.

        The chain runs with discrete weights so that x-moves taken at the top
        level T-1 draw from pi(x | L > m_{T-1}). After N_level such draws the
        next threshold is their (1 - rho) order statistic and Z_T = rho^T.

        With a budget, construction may spend (1 - estimation_share) of it.
        A level may close before N_level draws once it holds min_level_visits
        and has used its quota: what is left of the construction budget over
        the t_max - T levels still allowed.

        Returns:
            Level grid with boosted weights

        Raises:
            LevelConstructionError: If a level cannot be completed within
                level_budget_factor * N_level iterations or within the
                construction budget
        """
        cfg = self.config
        grid = LevelGrid.root()
        weight = build_cumulative(grid, WeightMode.DISCRETE)
        self.state.threshold, self.state.level = 0.0, 0
        per_level = cfg.level_budget_factor * cfg.n_level
        limit = self._construction_limit()
        start = self.state.iterations

        while grid.level_count < cfg.t_max:
            top = grid.level_count
            quota = None
            if limit is not None:
                quota = (limit - self.state.kernel_applications) // max(cfg.t_max - top, 1)
            spent_before = self.state.kernel_applications
            recorded: List[float] = []
            attempts = 0
            while len(recorded) < cfg.n_level:
                if quota is not None and len(recorded) >= cfg.min_level_visits \
                        and self.state.kernel_applications - spent_before >= quota:
                    break
                if attempts >= per_level:
                    raise level_budget_error(
                        f"level {top + 1} not completed after {attempts} iterations", partial_grid=grid.copy()
                    )
                if limit is not None and self.state.kernel_applications + cfg.kernel_steps > limit:
                    raise level_budget_error(
                        f"construction budget of {limit} kernel applications spent at level {top + 1}",
                        partial_grid=grid.copy(),
                    )
                at_top = self.state.level == top
                likelihood = self._x_move()
                if at_top:
                    recorded.append(likelihood)
                self._m_move(weight)
                self._advance(weight)
                attempts += 1

            threshold = upper_quantile(recorded, cfg.rho)
            final = cfg.gamma is not None and threshold >= cfg.gamma
            if final:
                threshold = cfg.gamma
            if threshold <= grid.top_threshold:
                self._warn(f"quantile plateau at m={threshold:.6g}; stopping level construction at T={top}")
                break

            self._add_level(grid, threshold)
            weight = build_cumulative(grid, WeightMode.DISCRETE)
            logger.debug(f"Level {grid.level_count}: m={threshold:.6g} from {len(recorded)} draws "
                         f"after {attempts} iterations")

            if final:
                break
            if cfg.gamma is None and self._tail_negligible(grid):
                break

        if cfg.gamma is None and grid.level_count >= cfg.t_max > 0 and not self._tail_negligible(grid):
            self._warn(f"tail above m={grid.top_threshold:.6g} still significant after {grid.level_count} levels")
        if cfg.gamma is not None and grid.top_threshold < cfg.gamma:
            self._warn(f"threshold {cfg.gamma:g} not reached after {grid.level_count} levels; forcing it as the top level")
            self._add_level(grid, cfg.gamma)

        self.construction_iterations = self.state.iterations - start
        logger.info(
            f"Built {grid.level_count} levels in {self.construction_iterations} iterations "
            f"(top threshold {grid.top_threshold:.6g})"
        )
        return grid

    def run_estimation(self, grid: LevelGrid, n: Optional[int] = None) -> SplitResult:
        """
        Estimate Z_t on a fixed grid with Omega_t = 1 / Z_hat_t refreshed every iteration.

        Visit masses start at nu_init * Z_t and gain Omega(L_i)^-1 at every
        level below L_i; Z_hat_t = nu_t / nu_0. Samples above the top level
        feed the tail term of the evidence integral.

        Args:
            grid: Levels from build_levels (weights are reset, no boost)
            n: Iterations; defaults to what the budget leaves, or config.n

        Returns:
            SplitResult with the refined grid and headline estimate

        Raises:
            LevelConstructionError: If the budget leaves no estimation iterations
        """
        cfg = self.config
        mode = cfg.resolved_weight_mode
        grid = grid.copy()
        grid.validate()
        levels = grid.level_count
        if n is None:
            left = self._budget_left()
            n = cfg.n if left is None else max(left // cfg.kernel_steps, 0)
            if left is not None and n == 0:
                raise level_budget_error(
                    f"no estimation budget left after {self.state.kernel_applications} kernel applications",
                    partial_grid=grid,
                )

        log_nu = math.log(cfg.nu_init) + grid.log_estimates
        grid.log_weights = -grid.log_estimates
        weight = build_cumulative(grid, mode)
        knots = grid.thresholds.tolist()
        top_threshold = knots[-1]
        log_cutoff = math.log(cfg.negligible_increment) if cfg.negligible_increment > 0.0 else -math.inf
        log_tail_mass = -math.inf
        log_tail_excess = -math.inf
        visits = np.zeros(levels + 1, dtype=np.int64)
        window = np.zeros(levels + 1)
        adaptation_round = 0
        self_balancing = cfg.adaptation == AdaptationStrategy.SELF_BALANCING

        self._m_move(weight)
        for i in range(n):
            likelihood = self._x_move()
            log_inverse = -weight.log_evaluate_below(likelihood)
            below = bisect.bisect_left(knots, likelihood)
            if below > 0:
                segment = log_nu[:below]
                # relative increments under the cutoff are dropped
                np.logaddexp(segment, log_inverse, out=segment, where=log_inverse - segment > log_cutoff)
            if likelihood > top_threshold:
                log_tail_mass = np.logaddexp(log_tail_mass, log_inverse)
                log_tail_excess = np.logaddexp(log_tail_excess, log_inverse + math.log(likelihood - top_threshold))

            self._m_move(weight)
            visits[self.state.level] += 1
            window[self.state.level] += 1

            if self_balancing:
                weight = weight.with_log_omega(log_nu[0] - log_nu)
            elif (i + 1) % cfg.adaptation_interval == 0:
                if cfg.adaptation == AdaptationStrategy.REBALANCE:
                    weight = rebalance_weights(window, weight, cap=cfg.rebalance_cap)
                    window[:] = 0.0
                else:
                    weight, flat = flat_histogram_update(
                        window, weight, None,
                        step_size(adaptation_round + 1, cfg.fh_step_scale, cfg.fh_step_decay),
                        cfg.fh_tolerance,
                    )
                    if flat:
                        adaptation_round += 1
                        window[:] = 0.0
            self._advance(weight)

        grid.log_estimates = log_nu - log_nu[0]
        grid.log_weights = np.asarray(weight.log_omega, dtype=float).copy()
        grid.log_visits = log_nu
        if log_tail_mass > -math.inf:
            grid.tail_integral = math.exp(grid.log_estimates[-1] + log_tail_excess - log_tail_mass)

        evidence = integrate_level_estimates(grid)
        if cfg.gamma is not None:
            position = bisect.bisect_left(knots, cfg.gamma)
            if position > levels or knots[position] != cfg.gamma:
                self._warn(f"threshold {cfg.gamma:g} is not a grid level; reporting the top level")
                position = levels
            log_estimate = float(grid.log_estimates[position])
            estimate = math.exp(log_estimate)
        else:
            estimate = evidence
            log_estimate = math.log(evidence) if evidence > 0.0 else -math.inf

        logger.info(f"Estimation finished after {n} iterations: estimate={estimate:.6g}")
        return SplitResult(
            grid=grid,
            estimate=estimate,
            log_estimate=log_estimate,
            evidence=evidence,
            gamma=cfg.gamma,
            kernel_applications=self.state.kernel_applications,
            construction_iterations=self.construction_iterations,
            estimation_iterations=n,
            visits=visits,
            trace=list(self.trace),
            warnings=list(self.warnings),
        )

    def run(self) -> SplitResult:
        return self.run_estimation(self.build_levels())


def build_levels(model: TargetModel, config: SplitConfig, rng: np.random.Generator) -> LevelGrid:
    return SplitSampler(model, config, rng).build_levels()


def run_estimation(model: TargetModel, grid: LevelGrid, config: SplitConfig, rng: np.random.Generator,
                   state: Optional[SplitChainState] = None, n: Optional[int] = None) -> SplitResult:
    return SplitSampler(model, config, rng, state=state).run_estimation(grid, n=n)


def run_split_sampling(model: TargetModel, config: SplitConfig, rng: np.random.Generator) -> SplitResult:
    return SplitSampler(model, config, rng).run()


def run_fixed_weight_chain(
    model: TargetModel,
    weight: CumulativeWeight,
    n: int,
    rng: np.random.Generator,
    kernel_steps: int = 1,
    start: Optional[Sample] = None,
) -> SampleBatch:
    """
    Run the joint chain with a fixed weight and record every iteration.

    With the slice weight (Omega(m) = m) this is slice sampling from the
    posterior; with grid weights it is the non-adaptive split sampler.
    """
    sample = start or model.sample_prior(rng)
    threshold = 0.0
    likelihoods = np.empty(n)
    thresholds = np.empty(n)
    levels = np.empty(n, dtype=np.int64)
    log_omega = np.empty(n)
    for i in range(n):
        sample = model.constrained_steps(sample, threshold, rng, kernel_steps)
        likelihood = sample.likelihood
        log_omega[i] = weight.log_evaluate_below(likelihood)
        threshold = sample_level(likelihood, weight, rng)
        likelihoods[i] = likelihood
        thresholds[i] = threshold
        levels[i] = weight.level_of(threshold)
    return SampleBatch(likelihoods=likelihoods, thresholds=thresholds, levels=levels,
                       log_omega=log_omega, weight=weight)


def _log_omega_for(batch: SampleBatch, weight: Optional[CumulativeWeight]) -> np.ndarray:
    if weight is None or weight is batch.weight:
        return batch.log_omega
    return np.array([weight.log_evaluate_below(v) for v in batch.likelihoods.tolist()])


def rao_blackwell_marginal(batch: SampleBatch, weight: Optional[CumulativeWeight] = None) -> np.ndarray:
    """
    Level marginal pi_hat_t averaged over the conditional law of m given each L_i.

    For discrete weights pi_hat_t = (1/N) sum_i omega_t I(L_i > m_t) / Omega(L_i);
    piecewise-exponential weights add the partial segment just below each L_i.

    Returns:
        Probabilities over levels 0..T summing to one
    """
    if batch.size == 0:
        raise empty_batch_error()
    weight = weight or batch.weight
    if weight is None or not weight.is_grid:
        raise construction_error("the level marginal needs a grid weight", param="weight",
                                 code=ErrorCode.INVALID_PARAMETER)
    n = batch.size
    log_omega_l = _log_omega_for(batch, weight)
    order = np.argsort(batch.likelihoods, kind="stable")
    sorted_l = batch.likelihoods[order]
    suffix = np.logaddexp.accumulate((-log_omega_l[order])[::-1])[::-1]
    first_above = np.searchsorted(sorted_l, weight.knots, side="right")
    log_mass = np.full(first_above.shape, -math.inf)
    has_mass = first_above < n
    log_mass[has_mass] = suffix[first_above[has_mass]]
    marginal = np.exp(weight.log_jumps() + log_mass) / n

    if weight.mode == WeightMode.PIECEWISE_EXPONENTIAL:
        below = np.searchsorted(weight.knots, batch.likelihoods, side="left") - 1
        following = below + 1
        inside = (below >= 0) & (following <= weight.level_count)
        partial = -np.expm1(np.asarray(weight.log_omega)[below[inside]] - log_omega_l[inside])
        np.add.at(marginal, following[inside], partial / n)
    return marginal


def visit_frequency_marginal(batch: SampleBatch, weight: Optional[CumulativeWeight] = None) -> np.ndarray:
    """Naive level marginal: the fraction of iterations spent at each level."""
    if batch.size == 0:
        raise empty_batch_error()
    weight = weight or batch.weight
    size = weight.level_count + 1 if weight is not None and weight.is_grid else int(batch.levels.max()) + 1
    return np.bincount(batch.levels, minlength=size)[:size] / batch.size


def estimate_z_of_m(batch: SampleBatch, m: float) -> float:
    """Z_hat(m) = sum over L_i > m of Omega(L_i)^-1, over the sum of all Omega(L_i)^-1."""
    if batch.size == 0:
        raise empty_batch_error()
    log_w = -batch.log_omega
    above = batch.likelihoods > m
    if not above.any():
        return 0.0
    return float(np.exp(logsumexp(log_w[above]) - logsumexp(log_w)))


def estimate_z(batch: SampleBatch) -> float:
    """Z_hat = sum Omega(L_i)^-1 L_i / sum Omega(L_i)^-1; the harmonic mean when omega = 1."""
    if batch.size == 0:
        raise empty_batch_error()
    log_w = -batch.log_omega
    with np.errstate(divide="ignore"):
        log_l = np.log(batch.likelihoods)
    return float(np.exp(logsumexp(log_w + log_l) - logsumexp(log_w)))


class SplitSamplingEstimator(EstimatorInterface):
    """Harness adapter running build_levels followed by run_estimation."""

    def __init__(self, config: SplitConfig):
        self.config = config

    @property
    def name(self) -> str:
        return "ss"

    def estimate(self, model: TargetModel, rng: np.random.Generator) -> EstimatorResult:
        return run_split_sampling(model, self.config, rng).to_estimator_result(self.name)
