"""
Alternative weight-adaptation strategies for the split chain.

Self-balancing (Omega_t = 1 / Z_t after every iteration) lives in the
sampler itself. This module holds the strategies driven by the observed
level-visit measure: capped re-balancing and a flat-histogram stochastic
approximation, plus the harmonic-mean initial weight.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from config import settings
from utils.errors import ErrorCode, construction_error, empty_batch_error
from .weight_function import CumulativeWeight, weight_from_knots

logger = logging.getLogger(__name__)


def step_size(round_index: int, scale: Optional[float] = None, decay: Optional[float] = None) -> float:
    """Stochastic-approximation gain gamma_n = C n^-alpha."""
    scale = settings.fh_step_scale if scale is None else scale
    decay = settings.fh_step_decay if decay is None else decay
    return scale * float(round_index) ** -decay


def _normalise(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    total = values.sum()
    if not total > 0.0:
        raise empty_batch_error("visit measure has no mass")
    return values / total


def _target_measure(target: Optional[np.ndarray], size: int) -> np.ndarray:
    if target is None:
        return np.full(size, 1.0 / size)
    return _normalise(target)


def _from_jumps(weight: CumulativeWeight, log_jumps: np.ndarray) -> CumulativeWeight:
    log_omega = np.logaddexp.accumulate(log_jumps)
    # Omega_0 = 1
    return weight_from_knots(weight.knots, log_omega - log_omega[0], weight.mode)


def rebalance_weights(
    visits: np.ndarray,
    weight: CumulativeWeight,
    target: Optional[np.ndarray] = None,
    cap: Optional[float] = None,
) -> CumulativeWeight:
    """
    Re-weight levels inversely to how often they were visited.

    The per-level ratio omega*_t / omega_t is phi_t / mu_t, scaled so the most
    over-visited level keeps its weight and capped at e^cap. Levels never
    visited keep their weight.

    Args:
        visits: Visit counts or measure per level
        weight: Current grid weight
        target: Target level distribution phi, uniform when omitted
        cap: omega_max, the log of the largest allowed ratio

    Returns:
        New weight with the same knots and shape, Omega_0 = 1
    """
    if not weight.is_grid:
        raise construction_error("rebalancing needs a level grid weight", param="weight",
                                 code=ErrorCode.INVALID_PARAMETER)
    cap = settings.rebalance_cap if cap is None else cap
    mu = _normalise(visits)
    phi = _target_measure(target, mu.size)
    if mu.size != weight.level_count + 1:
        raise construction_error("one visit entry per level is required", param="visits",
                                 code=ErrorCode.INVALID_PARAMETER)

    visited = mu > 0.0
    log_ratio = np.zeros_like(mu)
    log_ratio[visited] = np.log(phi[visited]) - np.log(mu[visited])
    log_ratio[visited] -= log_ratio[visited].min()
    log_ratio = np.minimum(log_ratio, cap)
    return _from_jumps(weight, weight.log_jumps() + log_ratio)


def flat_histogram_update(
    visits: np.ndarray,
    weight: CumulativeWeight,
    target: Optional[np.ndarray],
    gain: float,
    tolerance: Optional[float] = None,
) -> Tuple[CumulativeWeight, bool]:
    """
    Flat-histogram step: when max |mu - phi| < tolerance, move log omega by -gain (mu - phi).

    Returns:
        Tuple of (weight, whether the histogram was flat and an update applied)
    """
    tolerance = settings.fh_tolerance if tolerance is None else tolerance
    mu = _normalise(visits)
    phi = _target_measure(target, mu.size)
    if np.max(np.abs(mu - phi)) >= tolerance:
        return weight, False
    return _from_jumps(weight, weight.log_jumps() - gain * (mu - phi)), True


def harmonic_mean_weight(log_likelihoods: np.ndarray, cap: float) -> CumulativeWeight:
    """
    Exponential weight kappa e^{kappa m} matched to the harmonic mean at m = cap.

    With posterior draws x_i, h = mean(1 / L_i) estimates 1 / Z; kappa solves
    kappa e^{kappa cap} = h.

    Args:
        log_likelihoods: log L of posterior draws (e.g. from a slice chain)
        cap: Upper end M of the exponential weight, usually L_max

    Returns:
        Truncated exponential CumulativeWeight
    """
    log_l = np.asarray(log_likelihoods, dtype=float)
    if log_l.size == 0:
        raise empty_batch_error()
    log_h = float(logsumexp(-log_l) - math.log(log_l.size))

    # Solve in s = log kappa: s + e^s cap = log h
    def gap(s: float) -> float:
        return s + math.exp(s) * cap - log_h

    upper = log_h
    lower = min(log_h - 2.0, -math.log(cap))
    log_kappa = brentq(gap, lower, upper, xtol=1e-14, rtol=1e-14)
    kappa = math.exp(log_kappa)
    logger.debug(f"Harmonic-mean weight: log h={log_h:.6g}, kappa={kappa:.6g}")
    return CumulativeWeight.exponential(kappa, cap)
