"""Sample moments with bootstrap and jackknife standard errors."""

from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

DEFAULT_RESAMPLES = 1000
DEFAULT_JACKKNIFE_BLOCKS = 100
_RESAMPLE_ENTRIES = 1 << 22

Statistic = Callable[[NDArray], NDArray]


def central_moment(values: ArrayLike, order: int, axis: int = -1) -> NDArray[np.float64]:
    """Central moment of ``order`` about the sample mean; order 1 is the mean itself."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    values = np.asarray(values, dtype=float)
    mean = values.mean(axis=axis, keepdims=True)
    if order == 1:
        return np.squeeze(mean, axis=axis)
    return np.mean((values - mean) ** order, axis=axis)


def skewness(values: ArrayLike, axis: int = -1) -> NDArray[np.float64]:
    """mu_3 / mu_2^{3/2}."""
    return central_moment(values, 3, axis) / central_moment(values, 2, axis) ** 1.5


def kurtosis(values: ArrayLike, axis: int = -1) -> NDArray[np.float64]:
    """mu_4 / mu_2^2 (not the excess, a Gaussian gives 3)."""
    return central_moment(values, 4, axis) / central_moment(values, 2, axis) ** 2


def bootstrap_errors(
    values: ArrayLike,
    statistics: dict[str, Statistic],
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> dict[str, float]:
    """Bootstrap standard errors of several statistics on the same resamples.

    Every statistic receives a (resamples, n) array and reduces along the
    last axis.

    Args:
        values: One-dimensional sample.
        statistics: Mapping of name to vectorized statistic.
        resamples: Number of bootstrap resamples.
        seed: Seed of the resampling stream.

    Returns:
        Mapping of name to standard error (ddof=1 over resamples).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("bootstrap needs a one-dimensional sample of size >= 2")
    if resamples < 2:
        raise ValueError(f"resamples must be >= 2, got {resamples}")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chunk = max(1, min(resamples, _RESAMPLE_ENTRIES // values.size))
    replicates: dict[str, list[NDArray]] = {name: [] for name in statistics}
    for start in range(0, resamples, chunk):
        size = min(chunk, resamples - start)
        draws = values[rng.integers(0, values.size, size=(size, values.size))]
        for name, statistic in statistics.items():
            replicates[name].append(np.asarray(statistic(draws), dtype=float))

    return {name: float(np.std(np.concatenate(parts), ddof=1)) for name, parts in replicates.items()}


def jackknife_mean(
    values: ArrayLike, blocks: int = DEFAULT_JACKKNIFE_BLOCKS
) -> tuple[complex, float]:
    """Mean and delete-one-block jackknife standard error of a complex sample.

    The sample is cut into ``blocks`` contiguous blocks (fewer if the sample is
    smaller); trailing entries that do not fill a block are dropped from the
    error estimate only.
    """
    values = np.asarray(values, dtype=complex)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("jackknife needs a non-empty one-dimensional sample")
    mean = complex(values.mean())
    count = min(blocks, values.size)
    if count < 2:
        return mean, 0.0

    size = values.size // count
    used = values[: count * size].reshape(count, size)
    total = used.sum()
    estimates = (total - used.sum(axis=1)) / (size * (count - 1))
    spread = estimates - estimates.mean()
    variance = float(np.sum(np.abs(spread) ** 2)) * (count - 1) / count
    return mean, float(np.sqrt(variance))
