"""Monte Carlo estimation of winding-number moments and density correlators.

Realization ``i`` is always drawn from ``derive_seed(master_seed, i)``. Work is
split into contiguous index chunks, chunks are mapped over a process pool, and
results are reassembled in index order, so reports do not depend on the number
of workers.
"""

import logging
import math
from dataclasses import dataclass, field as dataclass_field
from multiprocessing import Pool
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from chiral_winding.analytic.curves import find_parallel_curves
from chiral_winding.analytic.moments import (
    MomentPrediction,
    i2 as curve_i2,
    predict_mean,
    predict_moments,
    predict_shape,
)
from chiral_winding.core.coeff_model import CoefficientField
from chiral_winding.core.ensemble import Realization, derive_seed
from chiral_winding.core.winding import WindingMethod, compute_winding
from chiral_winding.errors import (
    InconsistentWindingError,
    NearSingularError,
    NonConvergentError,
    RootOnCircleError,
    TooManyExclusionsError,
)
from chiral_winding.stats.estimators import (
    DEFAULT_RESAMPLES,
    bootstrap_errors,
    central_moment,
    jackknife_mean,
    kurtosis,
    skewness,
)

logger = logging.getLogger(__name__)

MOMENT_ORDERS = tuple(range(1, 7))
ORACLE_CHECKS = 10
EXCLUSION_LIMIT = 0.01
RECOMMENDED_SAMPLES = 100
MAX_CORR_POINTS = 4
CHUNK_SIZE = 32

# failures that exclude one realization instead of aborting the run
_EXCLUDED = (NearSingularError, RootOnCircleError, NonConvergentError, InconsistentWindingError)


@dataclass(frozen=True)
class MomentEstimate:
    """Empirical statistic with its bootstrap error and the matching prediction."""

    name: str
    value: float
    std_error: float
    predicted: float
    z_score: float

    def __post_init__(self) -> None:
        if self.std_error < 0 or not math.isfinite(self.std_error):
            raise ValueError(f"std_error of {self.name} must be finite and >= 0")


@dataclass(frozen=True)
class MomentReport:
    """Central moments of W from one Monte Carlo run.

    Attributes:
        n: Matrix dimension.
        samples: Number of realizations drawn.
        excluded: Realizations dropped after a numerical failure.
        central_moments: Orders 1..6; order 1 is the mean.
        skewness: mu_3 / mu_2^{3/2}.
        kurtosis: mu_4 / mu_2^2.
        predicted: Leading-order predictions for the even/odd central moments.
        i2: Variance coefficient used for the predictions.
        windings: Accepted winding numbers in realization order.
    """

    n: int
    samples: int
    excluded: int
    central_moments: tuple[MomentEstimate, ...]
    skewness: MomentEstimate
    kurtosis: MomentEstimate
    predicted: tuple[MomentPrediction, ...]
    i2: float
    model_hash: str
    master_seed: int
    method: WindingMethod
    windings: NDArray[np.int64] = dataclass_field(repr=False)

    def __post_init__(self) -> None:
        if self.samples <= self.excluded:
            raise ValueError(f"no realizations left: {self.excluded} of {self.samples} excluded")
        if self.moment(2).value < 0:
            raise ValueError("second central moment is negative")
        windings = np.array(self.windings, dtype=np.int64)
        windings.setflags(write=False)
        object.__setattr__(self, "windings", windings)

    def moment(self, order: int) -> MomentEstimate:
        for estimate in self.central_moments:
            if estimate.name == f"mu{order}":
                return estimate
        raise KeyError(f"no central moment of order {order}")

    @property
    def z_scores(self) -> dict[str, float]:
        estimates = self.central_moments + (self.skewness, self.kurtosis)
        return {estimate.name: estimate.z_score for estimate in estimates}


@dataclass(frozen=True)
class CorrelatorEstimate:
    """Empirical average of prod_l w(p_l) with a jackknife error."""

    points: tuple[float, ...]
    k: int
    estimate: complex
    std_error: float
    samples: int
    excluded: int
    n: int
    model_hash: str
    master_seed: int

    def __post_init__(self) -> None:
        if self.k != len(self.points):
            raise ValueError(f"k = {self.k} does not match {len(self.points)} points")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


def z_score(value: float, predicted: float, std_error: float) -> float:
    """(value - predicted) / std_error; 0 for an exact match, inf for a zero error otherwise."""
    difference = value - predicted
    if difference == 0:
        return 0.0
    if std_error == 0:
        return math.copysign(math.inf, difference)
    return difference / std_error


def _chunks(samples: int) -> list[range]:
    return [range(start, min(start + CHUNK_SIZE, samples)) for start in range(0, samples, CHUNK_SIZE)]


def _run_chunks(worker, tasks: list[tuple], workers: int) -> list:
    """Map ``worker`` over ``tasks`` and flatten the per-chunk lists in task order."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(tasks) == 1:
        results = [worker(task) for task in tasks]
    else:
        with Pool(processes=min(workers, len(tasks))) as pool:
            results = pool.map(worker, tasks)
    return [entry for chunk in results for entry in chunk]


def _oracle_method(method: WindingMethod) -> WindingMethod:
    if method is WindingMethod.ROOT_COUNT:
        return WindingMethod.PHASE_UNWRAP
    return WindingMethod.ROOT_COUNT


def _winding_chunk(task: tuple) -> list[tuple[int, int | None, str | None]]:
    field, n, master_seed, method, indices = task
    out = []
    for index in indices:
        realization = Realization.sample(n, derive_seed(master_seed, index))
        try:
            w = compute_winding(realization, field, method).w
        except _EXCLUDED as exc:
            out.append((index, None, f"{type(exc).__name__}: {exc}"))
            continue

        if index < ORACLE_CHECKS:
            _cross_check(realization, field, method, w, index)
        out.append((index, w, None))
    return out


def _cross_check(
    realization: Realization, field: CoefficientField, method: WindingMethod, w: int, index: int
) -> None:
    oracle = _oracle_method(method)
    try:
        check = compute_winding(realization, field, oracle).w
    except ValueError as exc:
        logger.info("oracle %s skipped for realization %d: %s", oracle.value, index, exc)
        return
    except _EXCLUDED as exc:
        logger.warning("oracle %s failed on realization %d: %s", oracle.value, index, exc)
        return
    if check != w:
        raise InconsistentWindingError(
            f"realization {index} (seed {realization.seed}): {method.value} gives {w}, "
            f"{oracle.value} gives {check}"
        )


def _collect(entries: list, samples: int, what: str) -> tuple[list, int]:
    accepted = []
    excluded = 0
    for index, value, reason in entries:
        if value is None:
            excluded += 1
            logger.warning("%s: realization %d excluded (%s)", what, index, reason)
        else:
            accepted.append(value)
    if excluded > EXCLUSION_LIMIT * samples:
        raise TooManyExclusionsError(
            f"{excluded} of {samples} realizations excluded (limit {EXCLUSION_LIMIT:.0%})",
            excluded=excluded,
            samples=samples,
        )
    return accepted, excluded


def _check_run(n: int, samples: int, master_seed: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not isinstance(samples, (int, np.integer)) or samples < 2:
        raise ValueError(f"samples must be an integer >= 2, got {samples}")
    if master_seed < 0:
        raise ValueError(f"master_seed must be >= 0, got {master_seed}")
    if samples < RECOMMENDED_SAMPLES:
        logger.warning("only %d samples; moments below %d samples are unreliable", samples, RECOMMENDED_SAMPLES)


def variance_coefficient(field: CoefficientField) -> float:
    """I2 from the parallelism curves of the canonicalized field."""
    canonical = field if field.canonical else field.canonicalize()
    return curve_i2(canonical, find_parallel_curves(canonical))


def sample_windings(
    field: CoefficientField,
    n: int,
    samples: int,
    master_seed: int,
    workers: int = 1,
    method: WindingMethod = WindingMethod.PHASE_UNWRAP,
) -> tuple[NDArray[np.int64], int]:
    """Winding numbers of ``samples`` realizations, with the number excluded.

    Raises:
        TooManyExclusionsError: If more than 1% of the realizations fail.
        InconsistentWindingError: If the oracle method disagrees on one of the
            first ten realizations.
    """
    _check_run(n, samples, master_seed)
    if not field.is_periodic:
        raise ValueError("winding numbers need a 2*pi-periodic field")
    tasks = [(field, int(n), int(master_seed), method, chunk) for chunk in _chunks(samples)]
    entries = _run_chunks(_winding_chunk, tasks, workers)
    accepted, excluded = _collect(entries, samples, "winding")
    return np.asarray(accepted, dtype=np.int64), excluded


def mc_winding_moments(
    field: CoefficientField,
    n: int,
    samples: int,
    master_seed: int,
    workers: int = 1,
    method: WindingMethod = WindingMethod.PHASE_UNWRAP,
    resamples: int = DEFAULT_RESAMPLES,
    i2: float | None = None,
) -> MomentReport:
    """Central moments of W with bootstrap errors and z-scores against the Gaussian limit.

    Args:
        field: 2*pi-periodic coefficient field.
        n: Matrix dimension.
        samples: Number of realizations.
        master_seed: Seed from which every realization seed is derived.
        workers: Number of worker processes.
        method: Winding extraction; the first ten realizations are
            re-counted with a second method.
        resamples: Bootstrap resamples.
        i2: Variance coefficient; computed from the parallelism curves if None.

    Returns:
        MomentReport.

    Raises:
        TooManyExclusionsError: If more than 1% of the realizations fail.
    """
    windings, excluded = sample_windings(field, n, samples, master_seed, workers, method)
    if i2 is None:
        i2 = variance_coefficient(field)

    values = windings.astype(float)
    statistics = {f"mu{k}": (lambda x, k=k: central_moment(x, k)) for k in MOMENT_ORDERS}
    statistics["skewness"] = skewness
    statistics["kurtosis"] = kurtosis
    with np.errstate(divide="ignore", invalid="ignore"):
        errors = bootstrap_errors(values, statistics, resamples=resamples, seed=master_seed)

    predictions = tuple(predict_moments(n, k, i2) for k in MOMENT_ORDERS)
    mean_prediction = predict_mean(field, n)

    moments = []
    for prediction in predictions:
        k = prediction.order
        value = float(central_moment(values, k))
        predicted = mean_prediction if k == 1 else prediction.leading_value
        error = _finite(errors[f"mu{k}"])
        moments.append(MomentEstimate(f"mu{k}", value, error, predicted, z_score(value, predicted, error)))

    shape = predict_shape(n, i2)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew, kurt = float(skewness(values)), float(kurtosis(values))
    skew_error, kurt_error = _finite(errors["skewness"]), _finite(errors["kurtosis"])

    report = MomentReport(
        n=int(n),
        samples=int(samples),
        excluded=excluded,
        central_moments=tuple(moments),
        skewness=MomentEstimate("skewness", skew, skew_error, shape.skewness, z_score(skew, shape.skewness, skew_error)),
        kurtosis=MomentEstimate("kurtosis", kurt, kurt_error, shape.kurtosis, z_score(kurt, shape.kurtosis, kurt_error)),
        predicted=predictions,
        i2=float(i2),
        model_hash=field.model_hash,
        master_seed=int(master_seed),
        method=method,
        windings=windings,
    )
    logger.info(
        "n=%d: %d realizations, %d excluded, mean %.4f, variance %.4f (predicted %.4f)",
        n,
        samples,
        excluded,
        report.moment(1).value,
        report.moment(2).value,
        report.moment(2).predicted,
    )
    return report


def _finite(value: float) -> float:
    return value if math.isfinite(value) else 0.0


def _points(points: ArrayLike) -> tuple[float, ...]:
    points = tuple(float(p) for p in np.atleast_1d(np.asarray(points, dtype=float)))
    if not 1 <= len(points) <= MAX_CORR_POINTS:
        raise ValueError(f"between 1 and {MAX_CORR_POINTS} points are supported, got {len(points)}")
    return points


def _density_chunk(task: tuple) -> list[tuple[int, complex | None, str | None]]:
    field, n, master_seed, points, indices = task
    out = []
    for index in indices:
        realization = Realization.sample(n, derive_seed(master_seed, index))
        try:
            product = complex(np.prod([realization.winding_density(field, p) for p in points]))
        except NearSingularError as exc:
            out.append((index, None, str(exc)))
            continue
        out.append((index, product, None))
    return out


def mc_corr(
    field: CoefficientField,
    n: int,
    points: Sequence[float],
    samples: int,
    master_seed: int,
    workers: int = 1,
) -> CorrelatorEstimate:
    """Average of prod_l w(p_l) over realizations with a block jackknife error.

    Raises:
        TooManyExclusionsError: If more than 1% of the realizations hit a
            near-singular K(p).
    """
    points = _points(points)
    _check_run(n, samples, master_seed)
    tasks = [(field, int(n), int(master_seed), points, chunk) for chunk in _chunks(samples)]
    accepted, excluded = _collect(_run_chunks(_density_chunk, tasks, workers), samples, "correlator")
    estimate, error = jackknife_mean(np.asarray(accepted, dtype=complex))
    return CorrelatorEstimate(
        points=points,
        k=len(points),
        estimate=estimate,
        std_error=error,
        samples=int(samples),
        excluded=excluded,
        n=int(n),
        model_hash=field.model_hash,
        master_seed=int(master_seed),
    )


def _ratio_chunk(task: tuple) -> list[tuple[int, complex | None, str | None]]:
    field, n, master_seed, points, shifts, indices = task
    grid = np.concatenate([points, points + shifts])
    k = len(points)
    out = []
    for index in indices:
        realization = Realization.sample(n, derive_seed(master_seed, index))
        signs, logabs = np.linalg.slogdet(realization.eval_k_grid(field, grid))
        if np.any(signs[:k] == 0):
            out.append((index, None, "det K(p) vanishes"))
            continue
        ratio = np.prod(signs[k:] / signs[:k]) * np.exp(np.sum(logabs[k:] - logabs[:k]))
        out.append((index, complex(ratio), None))
    return out


def mc_gen_func(
    field: CoefficientField,
    n: int,
    points: Sequence[float],
    shifts: Sequence[float],
    samples: int,
    master_seed: int,
    workers: int = 1,
) -> CorrelatorEstimate:
    """Average of prod_l det K(p_l + J_l) / det K(p_l), the sampled generating function.

    The estimate reuses CorrelatorEstimate; its ``points`` are the p_l.
    """
    points = _points(points)
    shifts = np.asarray(shifts, dtype=float).reshape(len(points))
    _check_run(n, samples, master_seed)
    tasks = [
        (field, int(n), int(master_seed), np.array(points), shifts, chunk) for chunk in _chunks(samples)
    ]
    accepted, excluded = _collect(_run_chunks(_ratio_chunk, tasks, workers), samples, "generating function")
    estimate, error = jackknife_mean(np.asarray(accepted, dtype=complex))
    return CorrelatorEstimate(
        points=points,
        k=len(points),
        estimate=estimate,
        std_error=error,
        samples=int(samples),
        excluded=excluded,
        n=int(n),
        model_hash=field.model_hash,
        master_seed=int(master_seed),
    )
