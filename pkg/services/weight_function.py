"""
Level grids and the cumulative weight Omega(m).

Omega is stored in log space: the boost applied while building levels pushes
it past e^1000 on the evidence problem. The canonical shape is piecewise
exponential through the knots (m_t, Omega_t), constant beyond the top knot;
the discrete shape puts atoms at the knots; the slice and truncated
exponential shapes have closed forms.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from models import WeightMode
from utils.errors import ErrorCode, construction_error, domain_error, range_error
from utils.numerics import log_expm1

logger = logging.getLogger(__name__)

# Tolerance for log U landing a rounding error above log Omega_T
_LOG_TOLERANCE = 1e-12


@dataclass
class LevelGrid:
    """Thresholds m_t with level estimates Z_t and cumulative weights Omega_t, all in log form."""
    thresholds: np.ndarray
    log_estimates: np.ndarray
    log_weights: np.ndarray
    log_visits: Optional[np.ndarray] = None
    tail_integral: float = 0.0

    @classmethod
    def root(cls) -> "LevelGrid":
        """Grid with the single level m_0 = 0, Z_0 = 1, Omega_0 = 1."""
        return cls(
            thresholds=np.zeros(1),
            log_estimates=np.zeros(1),
            log_weights=np.zeros(1),
        )

    @property
    def level_count(self) -> int:
        """Index T of the top level."""
        return len(self.thresholds) - 1

    @property
    def estimates(self) -> np.ndarray:
        return np.exp(self.log_estimates)

    @property
    def top_threshold(self) -> float:
        return float(self.thresholds[-1])

    def append_level(self, threshold: float, log_estimate: float, log_weight: float) -> None:
        self.thresholds = np.append(self.thresholds, threshold)
        self.log_estimates = np.append(self.log_estimates, log_estimate)
        self.log_weights = np.append(self.log_weights, log_weight)
        if self.log_visits is not None:
            self.log_visits = np.append(self.log_visits, -math.inf)

    def copy(self) -> "LevelGrid":
        return LevelGrid(
            thresholds=self.thresholds.copy(),
            log_estimates=self.log_estimates.copy(),
            log_weights=self.log_weights.copy(),
            log_visits=None if self.log_visits is None else self.log_visits.copy(),
            tail_integral=self.tail_integral,
        )

    def validate(self) -> None:
        """
        Check the grid invariants.

        Raises:
            ConstructionError: On a nonzero first threshold, repeated or
                decreasing thresholds, or nonpositive level estimates
        """
        m = np.asarray(self.thresholds, dtype=float)
        if m.size == 0 or m[0] != 0.0:
            raise construction_error("the first threshold must be 0", param="thresholds",
                                     code=ErrorCode.INVALID_PARAMETER)
        if np.any(np.diff(m) <= 0.0):
            raise construction_error("thresholds must be strictly increasing", param="thresholds")
        if not np.all(np.isfinite(self.log_estimates)):
            raise construction_error("level estimates must be positive", param="log_estimates",
                                     code=ErrorCode.NONPOSITIVE_ESTIMATE)

    def to_table(self) -> str:
        """Two-column text table of (m_t, log Omega_t)."""
        lines = ["m\tlog_omega"]
        lines.extend(f"{m!r}\t{w!r}" for m, w in zip(self.thresholds.tolist(), self.log_weights.tolist()))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class CumulativeWeight:
    """Omega(m), nondecreasing with Omega(0) = Omega_0 > 0."""
    mode: WeightMode
    knots: np.ndarray = field(default_factory=lambda: np.zeros(1))
    log_omega: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(1))
    kappa: float = 0.0
    cap: float = math.inf

    def __post_init__(self):
        # Python lists make the scalar bisections in the sampling loop cheap
        object.__setattr__(self, "_knot_list", np.asarray(self.knots, dtype=float).tolist())
        object.__setattr__(self, "_log_list", np.asarray(self.log_omega, dtype=float).tolist())
        object.__setattr__(self, "_rate_list", np.asarray(self.rates, dtype=float).tolist())

    @classmethod
    def slice_weight(cls) -> "CumulativeWeight":
        """omega = 1, Omega(m) = m."""
        return cls(mode=WeightMode.SLICE)

    @classmethod
    def exponential(cls, kappa: float, cap: float) -> "CumulativeWeight":
        """omega(m) = kappa e^{kappa m} on [0, cap], Omega(m) = e^{kappa min(m, cap)} - 1."""
        if not kappa > 0.0 or not cap > 0.0:
            raise construction_error("exponential weight needs kappa > 0 and cap > 0", param="kappa",
                                     code=ErrorCode.INVALID_PARAMETER)
        return cls(mode=WeightMode.EXPONENTIAL, kappa=kappa, cap=cap)

    @property
    def level_count(self) -> int:
        return len(self._knot_list) - 1

    @property
    def is_grid(self) -> bool:
        return self.mode in (WeightMode.PIECEWISE_EXPONENTIAL, WeightMode.DISCRETE)

    @property
    def log_total(self) -> float:
        """log Omega(infinity)."""
        if self.mode == WeightMode.SLICE:
            return math.inf
        if self.mode == WeightMode.EXPONENTIAL:
            return log_expm1(self.kappa * self.cap)
        return self._log_list[-1]

    def log_evaluate(self, m: float) -> float:
        """log Omega(m); the discrete shape is a right-continuous step."""
        if self.mode == WeightMode.SLICE:
            return math.log(m) if m > 0.0 else -math.inf
        if self.mode == WeightMode.EXPONENTIAL:
            a = self.kappa * min(m, self.cap)
            return log_expm1(a) if a > 0.0 else -math.inf
        knots = self._knot_list
        if m >= knots[-1]:
            return self._log_list[-1]
        s = bisect.bisect_right(knots, m)
        if self.mode == WeightMode.DISCRETE:
            return self._log_list[s - 1]
        return self._log_list[s - 1] + self._rate_list[s] * (m - knots[s - 1])

    def log_evaluate_below(self, likelihood: float) -> float:
        """
        log of the weight mass available to a point with likelihood L.

        Equal to log Omega(L) except for the discrete shape, whose atoms
        count only when strictly below L.
        """
        if self.mode != WeightMode.DISCRETE:
            return self.log_evaluate(likelihood)
        t = bisect.bisect_left(self._knot_list, likelihood) - 1
        return self._log_list[t] if t >= 0 else -math.inf

    def log_invert(self, log_u: float) -> float:
        """
        Smallest m with log Omega(m) >= log_u; 0 when log_u <= log Omega_0.

        Raises:
            RangeError: If log_u exceeds log Omega(infinity)
        """
        if self.mode == WeightMode.SLICE:
            return math.exp(log_u)
        if self.mode == WeightMode.EXPONENTIAL:
            if log_u > self.log_total + _LOG_TOLERANCE:
                raise range_error("u exceeds Omega(infinity)", param="u")
            return min(float(np.logaddexp(0.0, log_u)) / self.kappa, self.cap)

        logs = self._log_list
        if log_u <= logs[0]:
            return 0.0
        if log_u > logs[-1]:
            if log_u - logs[-1] > _LOG_TOLERANCE:
                raise range_error("u exceeds Omega(infinity)", param="u")
            return self._knot_list[-1]
        s = bisect.bisect_left(logs, log_u)
        if self.mode == WeightMode.DISCRETE:
            return self._knot_list[s]
        rate = self._rate_list[s]
        left = self._knot_list[s - 1]
        if rate == 0.0:
            return left
        m = left + (log_u - logs[s - 1]) / rate
        return min(max(m, left), self._knot_list[s])

    def level_of(self, m: float) -> int:
        """
        Level index of a threshold.

        Discrete: the knot index of m. Piecewise exponential: 0 for the atom
        at m = 0, t for m in (m_{t-1}, m_t].
        """
        if not self.is_grid:
            return 0
        if self.mode == WeightMode.DISCRETE:
            return bisect.bisect_right(self._knot_list, m) - 1
        if m <= 0.0:
            return 0
        return min(bisect.bisect_left(self._knot_list, m), self.level_count)

    def with_log_omega(self, log_omega: np.ndarray) -> "CumulativeWeight":
        """Same knots and shape with new ordinates, unvalidated."""
        log_omega = np.asarray(log_omega, dtype=float)
        rates = np.zeros_like(log_omega)
        rates[1:] = np.diff(log_omega) / np.diff(self.knots)
        return CumulativeWeight(mode=self.mode, knots=self.knots, log_omega=log_omega, rates=rates)

    def log_jumps(self) -> np.ndarray:
        """log omega_t = log(Omega_t - Omega_{t-1}), with omega_0 = Omega_0."""
        log_omega = np.asarray(self.log_omega, dtype=float)
        jumps = np.empty_like(log_omega)
        jumps[0] = log_omega[0]
        with np.errstate(divide="ignore"):
            jumps[1:] = log_omega[1:] + np.log(-np.expm1(log_omega[:-1] - log_omega[1:]))
        return jumps

    def to_table(self) -> str:
        lines = ["m\tlog_omega"]
        lines.extend(f"{m!r}\t{w!r}" for m, w in zip(self._knot_list, self._log_list))
        return "\n".join(lines) + "\n"


def build_cumulative(grid: LevelGrid, mode: WeightMode = WeightMode.PIECEWISE_EXPONENTIAL) -> CumulativeWeight:
    """
    Build Omega from the grid knots (m_t, Omega_t).

    Args:
        grid: Level grid; its log_weights are the knot ordinates
        mode: Piecewise exponential (rates kappa_t between knots) or discrete

    Returns:
        CumulativeWeight through every knot

    Raises:
        ConstructionError: On duplicate or unsorted knots, or decreasing weights
    """
    if mode not in (WeightMode.PIECEWISE_EXPONENTIAL, WeightMode.DISCRETE):
        raise construction_error(f"{mode.value} weights are not built from a grid", param="mode",
                                 code=ErrorCode.INVALID_PARAMETER)
    return weight_from_knots(grid.thresholds, grid.log_weights, mode)


def weight_from_knots(knots: np.ndarray, log_omega: np.ndarray,
                      mode: WeightMode = WeightMode.PIECEWISE_EXPONENTIAL) -> CumulativeWeight:
    """Validated CumulativeWeight through the knots (m_t, log Omega_t)."""
    knots = np.asarray(knots, dtype=float)
    log_omega = np.asarray(log_omega, dtype=float)
    if knots.shape != log_omega.shape:
        raise construction_error("knots and weights differ in length", param="log_weights",
                                 code=ErrorCode.INVALID_PARAMETER)
    if knots[0] != 0.0 or np.any(np.diff(knots) <= 0.0):
        raise construction_error("knots must start at 0 and be strictly increasing", param="thresholds")
    if not np.all(np.isfinite(log_omega)) or np.any(np.diff(log_omega) < 0.0):
        raise construction_error("cumulative weights must be finite and nondecreasing", param="log_weights",
                                 code=ErrorCode.INVALID_PARAMETER)
    rates = np.zeros_like(knots)
    rates[1:] = np.diff(log_omega) / np.diff(knots)
    return CumulativeWeight(mode=mode, knots=knots, log_omega=log_omega, rates=rates)


def evaluate_cumulative(weight: CumulativeWeight, m: float) -> float:
    """
    Omega(m) for m >= 0.

    Raises:
        DomainError: If m is negative or not a number
    """
    if not m >= 0.0:
        raise domain_error(f"Omega is defined for m >= 0, got {m}", param="m")
    return math.exp(weight.log_evaluate(m))


def invert_cumulative(weight: CumulativeWeight, u: float) -> float:
    """
    Inverse of Omega: returns 0 for u <= Omega_0.

    Raises:
        RangeError: If u is negative or exceeds Omega(infinity)
    """
    if not u >= 0.0:
        raise range_error(f"u must be nonnegative, got {u}", param="u")
    if u == 0.0:
        return 0.0
    return weight.log_invert(math.log(u))


def standard_product_weights(rho: float, levels: int) -> np.ndarray:
    """
    Omega_t = sum over s < t of 1/Z_s with Z_s = rho^s, for t = 0..levels.

    This is the cumulative weight that makes the split chain's x-marginal
    equal the mixture sampled by the standard product estimator; in closed
    form rho (rho^-t - 1) / (1 - rho).
    """
    omega = np.zeros(levels + 1)
    omega[1:] = np.cumsum(rho ** -np.arange(levels, dtype=float))
    return omega


def inclusion_product_weights(rho: float, levels: int) -> np.ndarray:
    """
    Omega_t = 1 + sum over 1 <= s <= t of (Z_{s-1} - Z_s) / (Z_{s-1} Z_s).

    Weights matching the product estimator that reuses earlier-stage samples;
    they telescope to 1 / Z_t = rho^-t.
    """
    z = rho ** np.arange(levels + 1, dtype=float)
    increments = (z[:-1] - z[1:]) / (z[:-1] * z[1:])
    return np.concatenate(([1.0], 1.0 + np.cumsum(increments)))
