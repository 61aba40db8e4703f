"""
Stochastic shortest path on the five-edge bridge network.

Edges carry independent exponential lengths x_j ~ Exp(mean u_j). The score
S(x) is the length of the shortest of the four a-to-d paths; the rare event
is S(x) > gamma. The constrained kernel is the exact Gibbs sampler: each
edge conditional given the others and S > m is a shifted exponential.
"""

import logging
import math
from typing import Dict, Sequence, Union

import numpy as np

from utils.errors import ErrorCode, contract_error, domain_error
from ..interfaces.target_model_interface import Sample, TargetModel

logger = logging.getLogger(__name__)

# Edge indices along each a-to-d path, in traversal order
PATHS = ((0, 3), (0, 2, 4), (1, 2, 3), (1, 4))
DEFAULT_SCALES = (0.25, 0.4, 0.1, 0.3, 0.2)
REFERENCE_PROBABILITIES: Dict[float, float] = {2.0: 1.34e-5, 3.0: 2.06e-8, 4.0: 3.10e-11}

# For edge j: the other edges of every path through j
_COMPLEMENTS = tuple(
    tuple(tuple(k for k in path if k != j) for path in PATHS if j in path)
    for j in range(5)
)


def path_lengths(x: np.ndarray) -> np.ndarray:
    """Unchecked vectorised S over the last axis."""
    x1, x2, x3, x4, x5 = (x[..., j] for j in range(5))
    return np.minimum(np.minimum(x1 + x4, x1 + x3 + x5), np.minimum(x2 + x3 + x4, x2 + x5))


def _validate_edges(x: np.ndarray) -> None:
    if x.shape[-1] != 5:
        raise domain_error(f"expected 5 edge lengths, got shape {x.shape}", param="x")
    if not np.all(np.isfinite(x)):
        raise domain_error("edge lengths must be finite", param="x", code=ErrorCode.NON_FINITE_INPUT)
    if np.any(x <= 0.0):
        raise domain_error("edge lengths must be positive", param="x", code=ErrorCode.NONPOSITIVE_INPUT)


def shortest_path_length(x: Union[Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
    """
    Length of the shortest a-to-d path.

    Args:
        x: Five positive edge lengths, or an array of shape (n, 5)

    Returns:
        min(x1+x4, x1+x3+x5, x2+x3+x4, x2+x5), as a float for a single point

    Raises:
        DomainError: On non-finite or nonpositive lengths
    """
    x = np.asarray(x, dtype=float)
    _validate_edges(x)
    s = path_lengths(x)
    return float(s) if s.ndim == 0 else s


def conditional_shift(x: np.ndarray, j: int, m: float) -> np.ndarray:
    """Lower bound max(0, m - rest of each path through edge j) of the j-th conditional."""
    shift = np.zeros(x.shape[:-1])
    for others in _COMPLEMENTS[j]:
        rest = x[..., others[0]]
        for k in others[1:]:
            rest = rest + x[..., k]
        shift = np.maximum(shift, m - rest)
    return shift


def gibbs_conditional_sweep(
    x: np.ndarray,
    m: float,
    rng: np.random.Generator,
    scales: Sequence[float] = DEFAULT_SCALES,
) -> np.ndarray:
    """
    One systematic Gibbs sweep (edges 1 to 5) targeting pi(x | S(x) > m).

    Works on a single point or on a batch of rows; the batch consumes the
    random stream row-major, so a single row reproduces the scalar kernel.

    Raises:
        ContractError: If some row does not satisfy S(x) > m
    """
    x = np.array(x, dtype=float)
    _validate_edges(x)
    if m > 0.0 and np.any(path_lengths(x) <= m):
        raise contract_error(f"state does not satisfy S(x) > {m:.6g}", param="m")
    scales = np.asarray(scales, dtype=float)
    draws = rng.standard_exponential(size=x.shape)
    for j in range(5):
        x[..., j] = conditional_shift(x, j, m) + scales[j] * draws[..., j]
    return x


class ShortestPathModel(TargetModel):
    """Bridge network with exponential edge lengths; L(x) = S(x)."""

    def __init__(self, scales: Sequence[float] = DEFAULT_SCALES):
        scales = np.asarray(scales, dtype=float)
        if scales.shape != (5,) or np.any(scales <= 0.0):
            raise domain_error("edge scales must be five positive means", param="scales")
        self._scales = scales
        self._scale_list = scales.tolist()

    @property
    def name(self) -> str:
        return "shortest_path"

    @property
    def dimension(self) -> int:
        return 5

    @property
    def scales(self) -> np.ndarray:
        return self._scales.copy()

    def reference_probability(self, gamma: float) -> float:
        """Published value of P(S > gamma) for the default scales, NaN when unknown."""
        return REFERENCE_PROBABILITIES.get(float(gamma), math.nan)

    def log_likelihood(self, x: np.ndarray) -> float:
        return math.log(shortest_path_length(x))

    def likelihood(self, x: np.ndarray) -> float:
        return shortest_path_length(x)

    def evaluate(self, x: np.ndarray) -> Sample:
        x = np.asarray(x, dtype=float)
        s = shortest_path_length(x)
        return Sample(x=x, likelihood=s, log_likelihood=math.log(s))

    def sample_prior_batch(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_exponential(size=(n, 5)) * self._scales

    def likelihood_batch(self, xs: np.ndarray) -> np.ndarray:
        return path_lengths(np.asarray(xs, dtype=float))

    def constrained_step(self, sample: Sample, threshold: float, rng: np.random.Generator) -> Sample:
        # Scalar fast path of gibbs_conditional_sweep; same draws, same arithmetic
        if not sample.likelihood > threshold:
            raise contract_error(f"state does not satisfy S(x) > {threshold:.6g}", param="m")
        draws = rng.standard_exponential(5).tolist()
        x = sample.x.tolist()
        for j in range(5):
            shift = 0.0
            for others in _COMPLEMENTS[j]:
                rest = x[others[0]]
                for k in others[1:]:
                    rest = rest + x[k]
                gap = threshold - rest
                if gap > shift:
                    shift = gap
            x[j] = shift + self._scale_list[j] * draws[j]
        x1, x2, x3, x4, x5 = x
        s = min(x1 + x4, x1 + x3 + x5, x2 + x3 + x4, x2 + x5)
        return Sample(x=np.array(x), likelihood=s, log_likelihood=math.log(s))

    def constrained_batch(self, xs: np.ndarray, threshold: float, rng: np.random.Generator):
        out = gibbs_conditional_sweep(xs, threshold, rng, self._scales)
        return out, path_lengths(out)
