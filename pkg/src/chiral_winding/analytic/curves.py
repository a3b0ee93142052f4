"""Parallelism curves on the (p, q) torus.

Re L(p, q) = -ln|S(p, q)| is non-negative and vanishes exactly where v(p)
and v(q) are parallel. Its zero set is a finite union of closed curves, one
of which is always the diagonal (t, t). The curves are found by scanning
Re L on a grid, refining local minima with Newton iterations and tracing each
curve by predictor-corrector continuation along the null eigenvector of the
Hessian.

A tangent of the zero set is proportional to (|Delta(q)|, s |Delta(p)|), so
every curve winds at least once in the p direction.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from chiral_winding.core.coeff_model import (
    PARALLEL_TOLERANCE,
    TWO_PI,
    CoefficientField,
    parallel_sign,
)
from chiral_winding.errors import (
    MulticriticalPointError,
    NonClosureError,
    NotParallelError,
)

logger = logging.getLogger(__name__)

MIN_SCAN_GRID = 128
SCAN_THRESHOLD = 1e-4
MULTICRITICAL_TRACE = 1e-8
CLOSURE_TOLERANCE = 1e-6
DEDUPLICATION_DISTANCE = 1e-3
NEWTON_ITERATIONS = 50
CORRECTOR_ITERATIONS = 20

CSV_COLUMNS = ("curve_id", "t", "p", "q", "s1", "s2", "abs_delta_p", "abs_delta_q", "tangent_norm")


def torus_difference(x: NDArray, y: NDArray) -> NDArray:
    """x - y with every component wrapped to [-pi, pi)."""
    return np.mod(np.asarray(x) - np.asarray(y) + math.pi, TWO_PI) - math.pi


def torus_distance(x: NDArray, y: NDArray) -> NDArray:
    return np.linalg.norm(torus_difference(x, y), axis=-1)


@dataclass(frozen=True, eq=False)
class Curve:
    """One closed parallelism curve Gamma(t), t in [0, 2*pi).

    The curve is parametrized proportionally to arclength. ``points`` are
    lifted (unwrapped) coordinates; after one period the curve has advanced
    by 2*pi*wraps.

    Attributes:
        t: Uniform parameter samples in [0, 2*pi).
        points: Gamma(t_i) refined onto the zero set, shape (M, 2).
        tangent: Gamma'(t_i), shape (M, 2).
        signs: s_a = sign Gamma'_a, shape (M, 2).
        abs_delta: |Delta(Gamma_a(t_i))|, shape (M, 2).
        wraps: Winding of the curve in p and q.
        length: Arclength of one period.
    """

    t: NDArray[np.float64]
    points: NDArray[np.float64]
    tangent: NDArray[np.float64]
    signs: NDArray[np.int64]
    abs_delta: NDArray[np.float64]
    wraps: tuple[int, int]
    length: float
    periodic_part: CubicSpline = field(repr=False)

    @property
    def start(self) -> NDArray[np.float64]:
        return np.mod(self.points[0], TWO_PI)

    @property
    def tangent_norm(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.tangent, axis=-1)

    def position(self, t: NDArray) -> NDArray[np.float64]:
        """Gamma(t) in lifted coordinates for arbitrary t."""
        t = np.asarray(t, dtype=float)
        drift = np.multiply.outer(t, np.array(self.wraps, dtype=float))
        return self.periodic_part(self.length * t / TWO_PI) + drift

    def velocity(self, t: NDArray) -> NDArray[np.float64]:
        """Gamma'(t) for arbitrary t."""
        t = np.asarray(t, dtype=float)
        scale = self.length / TWO_PI
        return scale * self.periodic_part(scale * t, 1) + np.array(self.wraps, dtype=float)

    def is_diagonal(self, tolerance: float = CLOSURE_TOLERANCE) -> bool:
        offset = torus_difference(self.points[:, 1], self.points[:, 0])
        return bool(np.abs(offset).max() < tolerance)


@dataclass(frozen=True, eq=False)
class CurveSet:
    """All parallelism curves of a canonical field, sorted by starting point."""

    curves: tuple[Curve, ...]
    scan_grid: int
    model_hash: str

    def __len__(self) -> int:
        return len(self.curves)

    def __iter__(self):
        return iter(self.curves)

    def __getitem__(self, index: int) -> Curve:
        return self.curves[index]

    @property
    def diagonal(self) -> Curve:
        for curve in self.curves:
            if curve.is_diagonal():
                return curve
        raise LookupError("curve set has no diagonal curve")


def check_multicritical(field: CoefficientField, samples: int) -> None:
    """Raise if |Delta(t)| vanishes somewhere.

    A crossing of parallelism curves needs a vanishing Hessian, i.e.
    Delta(p) = Delta(q) = 0; then (p, p) on the diagonal is a crossing too,
    so it suffices to search the zeros of |Delta| on [0, 2*pi).

    Raises:
        MulticriticalPointError: If 2 |Delta(t)|^2 < 1e-8 for some t.
    """
    grid = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    strength = np.abs(field.delta(grid)) ** 2
    step = grid[1] - grid[0]
    if 2.0 * strength.max() < MULTICRITICAL_TRACE:
        raise MulticriticalPointError("Delta vanishes identically: every point is critical", t=0.0)

    candidates = np.flatnonzero(
        (strength <= np.roll(strength, 1))
        & (strength <= np.roll(strength, -1))
        & (strength < 0.1 * strength.max())
    )
    for i in sorted(candidates, key=lambda i: grid[i]):
        result = minimize_scalar(
            lambda t: float(np.abs(field.delta(t)) ** 2),
            bounds=(grid[i] - step, grid[i] + step),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if 2.0 * result.fun < MULTICRITICAL_TRACE:
            t = float(np.mod(result.x, TWO_PI))
            raise MulticriticalPointError(
                f"parallelism curves cross at t = {t:.6f} (Hessian vanishes)", t=t
            )


def _jet(field: CoefficientField, x: NDArray) -> tuple[float, NDArray, NDArray]:
    return field.re_lagrangian_jet(float(x[0]), float(x[1]))


def refine_point(field: CoefficientField, x: NDArray) -> NDArray[np.float64]:
    """Newton iteration on grad Re L with a pseudo-inverse of the singular Hessian.

    Raises:
        NotParallelError: If Re L does not drop below the parallelism tolerance.
    """
    x = np.array(x, dtype=float)
    for _ in range(NEWTON_ITERATIONS):
        value, gradient, hessian = _jet(field, x)
        if value < 1e-14:
            break
        step = np.linalg.pinv(hessian, rcond=1e-8) @ gradient
        x = x - step
        if np.linalg.norm(step) < 1e-15:
            break

    value, _, _ = _jet(field, x)
    if value > PARALLEL_TOLERANCE:
        raise NotParallelError(f"Newton refinement stalled at Re L = {value:.3e}")
    return x


def null_direction(field: CoefficientField, x: NDArray, previous: NDArray | None = None) -> NDArray:
    """Unit null eigenvector of the Hessian at a parallel point.

    Oriented along ``previous`` when given, otherwise with Gamma'_1 >= 0.

    Raises:
        MulticriticalPointError: If the Hessian trace drops below 1e-8.
    """
    dp = complex(field.delta(x[0]))
    dq = complex(field.delta(x[1]))
    trace = abs(dp) ** 2 + abs(dq) ** 2
    if trace < MULTICRITICAL_TRACE:
        raise MulticriticalPointError(
            f"Hessian vanishes at ({x[0]:.6f}, {x[1]:.6f})", t=float(np.mod(x[0], TWO_PI))
        )
    s = parallel_sign(dp, dq, complex(field.covariance(x[0], x[1])))
    direction = np.array([abs(dq), s * abs(dp)]) / math.sqrt(trace)
    if previous is not None and direction @ previous < 0:
        direction = -direction
    return direction


def correct_point(field: CoefficientField, x: NDArray, direction: NDArray) -> NDArray[np.float64]:
    """Newton on Re L restricted to the normal of ``direction``.

    Raises:
        NonClosureError: If the corrector leaves the zero set.
    """
    normal = np.array([-direction[1], direction[0]])
    x = np.array(x, dtype=float)
    for _ in range(CORRECTOR_ITERATIONS):
        value, gradient, hessian = _jet(field, x)
        curvature = normal @ hessian @ normal
        if value < 1e-15 or curvature <= 0.0:
            break
        shift = (gradient @ normal) / curvature
        x = x - shift * normal
        if abs(shift) < 1e-14:
            break

    value, _, _ = _jet(field, x)
    if value > PARALLEL_TOLERANCE:
        raise NonClosureError(
            f"corrector lost the curve at ({x[0]:.6f}, {x[1]:.6f}), Re L = {value:.3e}"
        )
    return x


def trace_curve(
    field: CoefficientField, start: NDArray, step: float, max_steps: int
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Follow the zero set from ``start`` until it closes on the torus.

    Returns:
        Lifted points of one period (the closing point excluded) and the
        integer wraps of the curve.

    Raises:
        NonClosureError: If the curve does not close within max_steps.
    """
    x = np.array(start, dtype=float)
    direction = null_direction(field, x)
    points = [x]

    for count in range(1, max_steps + 1):
        predicted = x + step * direction
        x = correct_point(field, predicted, direction)
        direction = null_direction(field, x, direction)

        gap = float(torus_distance(x, start))
        if count > 3 and gap < 0.75 * step:
            wraps = np.rint((x - start) / TWO_PI).astype(np.int64)
            if gap > 0.5 * step:
                points.append(x)
            logger.debug("curve from (%.4f, %.4f) closed after %d steps", start[0], start[1], count)
            return np.array(points), wraps
        points.append(x)

    raise NonClosureError(
        f"curve from ({start[0]:.6f}, {start[1]:.6f}) did not close within {max_steps} steps"
    )


def _build_curve(
    field: CoefficientField, traced: NDArray, wraps: NDArray, samples: int
) -> Curve:
    closed = np.vstack([traced, traced[:1] + TWO_PI * wraps])
    arclength = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(closed, axis=0), axis=1))])
    length = float(arclength[-1])

    periodic = closed - np.outer(arclength / length, TWO_PI * wraps)
    periodic[-1] = periodic[0]
    spline = CubicSpline(arclength, periodic, bc_type="periodic", extrapolate="periodic")

    t = TWO_PI * np.arange(samples) / samples
    drift = np.outer(t, wraps.astype(float))
    raw_points = spline(length * t / TWO_PI) + drift
    tangent = length / TWO_PI * spline(length * t / TWO_PI, 1) + wraps.astype(float)

    points = np.array(
        [correct_point(field, x, d / np.linalg.norm(d)) for x, d in zip(raw_points, tangent)]
    )
    signs = np.where(tangent < 0, -1, 1).astype(np.int64)
    abs_delta = np.abs(field.delta(points))

    return Curve(
        t=t,
        points=points,
        tangent=tangent,
        signs=signs,
        abs_delta=abs_delta,
        wraps=(int(wraps[0]), int(wraps[1])),
        length=length,
        periodic_part=spline,
    )


def scan_seeds(field: CoefficientField, scan_grid: int) -> NDArray[np.float64]:
    """Row-wise local minima of Re L on a scan_grid x scan_grid torus grid."""
    grid = TWO_PI * np.arange(scan_grid) / scan_grid
    v = field.evaluate(grid)
    overlap = np.abs(v.conj() @ v.T)
    with np.errstate(divide="ignore"):
        re_l = -np.log(np.minimum(overlap, 1.0))

    step = grid[1]
    strength = float(np.abs(field.delta(grid)).max() ** 2)
    threshold = max(SCAN_THRESHOLD, 0.5 * strength * step**2)

    minima = (
        (re_l <= np.roll(re_l, 1, axis=1))
        & (re_l <= np.roll(re_l, -1, axis=1))
        & (re_l < threshold)
    )
    rows, cols = np.nonzero(minima)
    return np.column_stack([grid[rows], grid[cols]])


def find_parallel_curves(
    field: CoefficientField, scan_grid: int = 256, samples: int | None = None
) -> CurveSet:
    """All closed curves where v(p) is parallel to v(q).

    Args:
        field: Canonical coefficient field.
        scan_grid: Points per axis of the scan grid; sets the continuation
            step 2*pi/scan_grid.
        samples: Parameter samples stored per curve; defaults to scan_grid.

    Returns:
        CurveSet sorted by starting point, diagonal first.

    Raises:
        ValueError: If the field is not canonical or scan_grid < 128.
        MulticriticalPointError: If curves cross.
        NonClosureError: If continuation fails to close within 10x the
            expected number of steps.
    """
    if not field.canonical:
        raise ValueError("find_parallel_curves requires a canonical field")
    if scan_grid < MIN_SCAN_GRID:
        raise ValueError(f"scan_grid must be >= {MIN_SCAN_GRID}, got {scan_grid}")
    samples = samples or scan_grid

    check_multicritical(field, 4 * scan_grid)

    step = TWO_PI / scan_grid
    max_steps = 10 * 2 * scan_grid
    seeds = np.vstack([[0.0, 0.0], scan_seeds(field, scan_grid)])

    traced: list[tuple[NDArray, NDArray]] = []
    covered = np.empty((0, 2))
    for seed in seeds:
        if covered.size and torus_distance(covered, seed).min() < 2.0 * step:
            continue
        try:
            start = refine_point(field, seed)
        except NotParallelError:
            logger.debug("seed (%.4f, %.4f) is not on a curve", seed[0], seed[1])
            continue
        if covered.size and torus_distance(covered, start).min() < 2.0 * step:
            continue

        points, wraps = trace_curve(field, start, step, max_steps)
        traced.append((points, wraps))
        covered = np.vstack([covered, points])

    curves = [_build_curve(field, points, wraps, samples) for points, wraps in traced]
    curves = _deduplicate(curves)
    curves.sort(key=lambda c: (not c.is_diagonal(), round(c.start[0], 9), round(c.start[1], 9)))

    if not curves or not curves[0].is_diagonal():
        raise NonClosureError("diagonal curve was not recovered")

    for curve in curves:
        gap = torus_distance(curve.position(TWO_PI), curve.position(0.0))
        if gap > CLOSURE_TOLERANCE:
            raise NonClosureError(f"curve does not close: gap {gap:.2e}")

    logger.info("found %d parallelism curve(s)", len(curves))
    return CurveSet(curves=tuple(curves), scan_grid=scan_grid, model_hash=field.model_hash)


def _deduplicate(curves: list[Curve]) -> list[Curve]:
    kept: list[Curve] = []
    for curve in curves:
        if any(hausdorff_distance(curve, other) < DEDUPLICATION_DISTANCE for other in kept):
            logger.debug("dropping duplicate curve starting at %s", curve.start)
            continue
        kept.append(curve)
    return kept


def hausdorff_distance(first: Curve, second: Curve) -> float:
    """Hausdorff distance between the sampled curves on the torus."""
    distances = torus_distance(first.points[:, None, :], second.points[None, :, :])
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


def write_curves_csv(curveset: CurveSet, path: Path | str, comments: Sequence[str] = ()) -> None:
    """CSV with one row per stored curve sample; p, q wrapped to [0, 2*pi).

    ``comments`` (lines starting with #) precede the header.
    """
    path = Path(path)
    with open(path, "w", newline="") as f:
        for line in comments:
            f.write(line + "\n")
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for curve_id, curve in enumerate(curveset):
            wrapped = np.mod(curve.points, TWO_PI)
            for i, t in enumerate(curve.t):
                writer.writerow(
                    [
                        curve_id,
                        repr(float(t)),
                        repr(float(wrapped[i, 0])),
                        repr(float(wrapped[i, 1])),
                        int(curve.signs[i, 0]),
                        int(curve.signs[i, 1]),
                        repr(float(curve.abs_delta[i, 0])),
                        repr(float(curve.abs_delta[i, 1])),
                        repr(float(curve.tangent_norm[i])),
                    ]
                )


@dataclass(frozen=True, eq=False)
class Branch:
    """One sheet q = q(p) of a curve viewed as a multivalued function of p."""

    curve_index: int
    sheet: int
    periodic_part: CubicSpline = field(repr=False)
    slope: float

    def q(self, p: NDArray) -> NDArray[np.float64]:
        x = np.asarray(p, dtype=float) + TWO_PI * self.sheet
        return self.periodic_part(x) + self.slope * x

    def dq(self, p: NDArray) -> NDArray[np.float64]:
        x = np.asarray(p, dtype=float) + TWO_PI * self.sheet
        return self.periodic_part(x, 1) + self.slope


def curve_branches(curveset: CurveSet, oversample: int = 8) -> list[Branch]:
    """Split every curve into its sheets over the p circle.

    A curve winding w_p times in p yields w_p sheets.

    Raises:
        ValueError: If a curve turns back in p and is not a graph over p.
    """
    branches: list[Branch] = []
    for index, curve in enumerate(curveset):
        wraps_p, wraps_q = curve.wraps
        t = np.linspace(0.0, TWO_PI, oversample * len(curve.t) + 1)
        lifted = curve.position(t)
        p, q = lifted[:, 0], lifted[:, 1]
        if wraps_p < 1 or np.any(np.diff(p) <= 0):
            raise ValueError(f"curve {index} is not a graph over p")

        slope = wraps_q / wraps_p
        periodic = q - slope * p
        periodic[-1] = periodic[0]
        spline = CubicSpline(p, periodic, bc_type="periodic", extrapolate="periodic")
        branches.extend(Branch(index, sheet, spline, slope) for sheet in range(wraps_p))
    return branches
