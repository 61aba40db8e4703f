"""Small numerical helpers shared by the samplers."""

import math
from typing import Iterator, Sequence, Union

import numpy as np

ArrayLike = Union[Sequence[float], np.ndarray]


def upper_quantile(values: ArrayLike, rho: float) -> float:
    """
    Return the (1 - rho)-quantile as the ceil((1 - rho) n)-th order statistic.

    Args:
        values: Sample of likelihood or score values
        rho: Upper tail fraction in (0, 1)

    Returns:
        The order statistic leaving roughly a fraction rho of the sample above it
    """
    arr = np.asarray(values, dtype=float)
    n = arr.size
    k = min(max(int(math.ceil((1.0 - rho) * n)), 1), n)
    return float(np.partition(arr, k - 1)[k - 1])


def log_expm1(a: float) -> float:
    """log(e^a - 1) for a > 0 without overflow."""
    if a > 30.0:
        return a + math.log1p(-math.exp(-a))
    return math.log(math.expm1(a))


def safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def iter_chunks(n: int, chunk_size: int) -> Iterator[int]:
    """Yield chunk lengths summing to n."""
    remaining = n
    while remaining > 0:
        size = min(chunk_size, remaining)
        yield size
        remaining -= size
