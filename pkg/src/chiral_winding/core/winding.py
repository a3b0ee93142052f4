"""Winding number of det K(p) around the origin.

Three independent extractions:

- phase unwrapping of arg det K(p) with adaptive bisection,
- counting zeros of the Laurent polynomial det K(s), s = e^{ip}, inside the
  unit circle as eigenvalues of a block-companion pencil,
- summing scalar root counts over the eigenvalues of the pencil (K1, K2).

All three require the plain Laurent field; the gauged field is in general
not periodic and has no integer winding.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigvals

from chiral_winding.core.coeff_model import TWO_PI, CoefficientField
from chiral_winding.core.ensemble import Realization
from chiral_winding.errors import (
    InconsistentWindingError,
    NearSingularError,
    NonConvergentError,
    RootOnCircleError,
)

logger = logging.getLogger(__name__)

PHASE_STEP_LIMIT = math.pi / 2
DENSITY_STEP_LIMIT = 1.0
RESIDUAL_LIMIT = 0.1
DEFAULT_MAX_DEPTH = 30
MIN_INITIAL_GRID = 64
MAX_ROOT_DEGREE = 2048
ROOT_CIRCLE_TOLERANCE = 1e-8
COEFFICIENT_CUTOFF = 1e-13

# matrices per batch are capped to keep memory bounded at large N
_BATCH_ENTRIES = 1 << 24


class WindingMethod(Enum):
    """Winding extraction method."""

    PHASE_UNWRAP = "phase_unwrap"
    ROOT_COUNT = "root_count"
    SPHERICAL = "spherical"

    @classmethod
    def from_name(cls, name: str) -> "WindingMethod":
        aliases = {"unwrap": cls.PHASE_UNWRAP}
        if name in aliases:
            return aliases[name]
        try:
            return cls(name)
        except ValueError:
            choices = ", ".join(["unwrap"] + [m.value for m in cls])
            raise ValueError(f"unknown winding method {name!r}; choose from {choices}") from None


@dataclass(frozen=True)
class WindingResult:
    w: int
    method: WindingMethod
    grid_points_used: int
    refinement_depth: int


def default_initial_grid(field: CoefficientField, n: int) -> int:
    """max(256, 4 N (m_max - m_min))."""
    lo, hi = field.index_range
    return max(256, 4 * n * (hi - lo))


def phase_and_density(
    realization: Realization, field: CoefficientField, p: NDArray[np.float64]
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Unit phase of det K(p) and the log-derivative tr(K^{-1} K') for every p.

    Samples where det K vanishes exactly get phase 0 and an infinite
    log-derivative.
    """
    per_batch = max(1, _BATCH_ENTRIES // (2 * realization.n * realization.n))
    signs = np.empty(p.shape, dtype=complex)
    density = np.full(p.shape, np.inf, dtype=complex)
    for start in range(0, p.size, per_batch):
        chunk = p[start : start + per_batch]
        k = realization.eval_k_grid(field, chunk)
        chunk_signs, _ = np.linalg.slogdet(k)
        signs[start : start + chunk.size] = chunk_signs
        regular = chunk_signs != 0
        if np.any(regular):
            dk = realization.eval_k_grid(field, chunk[regular], order=1)
            solved = np.linalg.solve(k[regular], dk)
            density[start : start + chunk.size][regular] = np.einsum("kii->k", solved)
    return signs, density


def winding_unwrap(
    realization: Realization,
    field: CoefficientField,
    initial_grid: int | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> WindingResult:
    """Total change of arg det K(p) over [0, 2*pi] divided by 2*pi.

    An interval is bisected while its wrapped phase step exceeds pi/2, or
    while its width times the larger |tr(K^{-1} K')| at its ends exceeds 1.
    A zero of det K at distance d from the circle makes |tr(K^{-1} K')|
    about 1/d nearby, so the second test refines down to the scale d and
    catches full turns that the wrapped step alone reports as zero.

    Args:
        realization: Sampled (K1, K2).
        field: 2*pi-periodic coefficient field.
        initial_grid: Number of uniform panels; defaults to
            max(256, 4 N (m_max - m_min)).
        max_depth: Maximum number of bisection rounds.

    Returns:
        WindingResult with method PHASE_UNWRAP.

    Raises:
        ValueError: If the field is not periodic or initial_grid < 64.
        NonConvergentError: If a violating interval survives max_depth rounds
            or det K vanishes exactly on a sample.
        InconsistentWindingError: If the phase total is not near 2*pi*W.
    """
    if not field.is_periodic:
        raise ValueError("phase unwrapping needs a 2*pi-periodic field (not a gauged one)")
    if initial_grid is None:
        initial_grid = default_initial_grid(field, realization.n)
    if initial_grid < MIN_INITIAL_GRID:
        raise ValueError(f"initial_grid must be >= {MIN_INITIAL_GRID}, got {initial_grid}")

    p = np.linspace(0.0, TWO_PI, initial_grid + 1)
    signs, density = phase_and_density(realization, field, p)
    _check_nonzero(signs, p, realization)
    # the seam sample must coincide with the first one
    signs[-1] = signs[0]
    density[-1] = density[0]

    depth = 0
    while True:
        steps = np.angle(signs[1:] / signs[:-1])
        rate = np.maximum(np.abs(density[1:]), np.abs(density[:-1]))
        bad = np.flatnonzero(
            (np.abs(steps) > PHASE_STEP_LIMIT) | (np.diff(p) * rate > DENSITY_STEP_LIMIT)
        )
        if bad.size == 0:
            break
        if depth >= max_depth:
            raise NonConvergentError(
                f"phase step {np.abs(steps[bad]).max():.3f} persists after {max_depth} "
                f"bisections near p = {p[bad[0]]:.12f} (seed {realization.seed})"
            )
        mids = 0.5 * (p[bad] + p[bad + 1])
        mid_signs, mid_density = phase_and_density(realization, field, mids)
        _check_nonzero(mid_signs, mids, realization)
        p = np.insert(p, bad + 1, mids)
        signs = np.insert(signs, bad + 1, mid_signs)
        density = np.insert(density, bad + 1, mid_density)
        depth += 1

    turns = steps.sum() / TWO_PI
    w = int(round(turns))
    if abs(turns - w) >= RESIDUAL_LIMIT:
        raise InconsistentWindingError(f"phase total {turns:.4f} turns is not near an integer")

    if depth:
        logger.debug("unwrap used %d points after %d bisection rounds", p.size, depth)
    return WindingResult(w=w, method=WindingMethod.PHASE_UNWRAP, grid_points_used=int(p.size), refinement_depth=depth)


def _check_nonzero(signs: NDArray, p: NDArray, realization: Realization) -> None:
    zero = np.flatnonzero(signs == 0)
    if zero.size:
        raise NonConvergentError(
            f"det K(p) vanishes at p = {p[zero[0]]:.12f} (seed {realization.seed})"
        )


def companion_pencil(
    realization: Realization, field: CoefficientField
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Block-companion linearization (C0, C1) of P(s) = s^{-m_min} K(s).

    With B_j = a_{m_min+j} K1 + b_{m_min+j} K2 and d = m_max - m_min,
    det P(s) = 0 exactly when C0 v = s C1 v for some v != 0, where C0 has
    identity blocks on the superdiagonal and last block row
    [-B_0, ..., -B_{d-1}], and C1 = diag(I, ..., I, B_d).
    """
    n = realization.n
    lo, hi = field.index_range
    d = hi - lo
    blocks = [
        field.a_coeffs.get(lo + j, 0.0) * realization.k1
        + field.b_coeffs.get(lo + j, 0.0) * realization.k2
        for j in range(d + 1)
    ]
    size = n * d
    c0 = np.zeros((size, size), dtype=complex)
    c1 = np.eye(size, dtype=complex)
    for j in range(d - 1):
        c0[j * n : (j + 1) * n, (j + 1) * n : (j + 2) * n] = np.eye(n)
    for j in range(d):
        c0[(d - 1) * n :, j * n : (j + 1) * n] = -blocks[j]
    c1[(d - 1) * n :, (d - 1) * n :] = blocks[d]
    return c0, c1


def winding_root_count(realization: Realization, field: CoefficientField) -> WindingResult:
    """Count zeros of s^{-N m_min} det K(s) inside the unit circle.

    The zeros are the generalized eigenvalues of the block-companion pencil
    of s^{-m_min} K(s), of size D = N (m_max - m_min). Infinite eigenvalues
    (a singular leading block) lie outside the circle.

    Raises:
        ValueError: If the field is not a plain Laurent field or D > 2048.
        NearSingularError: If the pencil is singular (det K vanishes
            identically in s).
        RootOnCircleError: If a root lies within 1e-8 of the unit circle.
    """
    if not field.is_laurent:
        raise ValueError("root counting needs Laurent coefficients (not a gauged field)")

    n = realization.n
    lo, hi = field.index_range
    degree = n * (hi - lo)
    if degree > MAX_ROOT_DEGREE:
        raise ValueError(f"polynomial degree {degree} exceeds {MAX_ROOT_DEGREE}; use phase unwrapping")

    inside = 0
    if degree:
        c0, c1 = companion_pencil(realization, field)
        roots = eigvals(c0, c1, check_finite=False)
        if np.any(np.isnan(roots)):
            raise NearSingularError(f"singular matrix pencil (seed {realization.seed})")
        radii = np.abs(roots)
        near = np.abs(radii - 1.0)
        if np.any(near < ROOT_CIRCLE_TOLERANCE):
            raise RootOnCircleError(
                f"zero of det K on the unit circle: |s| = {radii[np.argmin(near)]!r}"
            )
        inside = int(np.count_nonzero(radii < 1.0))

    return WindingResult(
        w=inside + n * lo,
        method=WindingMethod.ROOT_COUNT,
        grid_points_used=degree,
        refinement_depth=0,
    )


def count_inside(coefficients: NDArray[np.complex128]) -> int:
    """Zeros of sum_j c_j s^j strictly inside |s| < 1.

    Coefficients below 1e-13 of the largest are treated as zero: trailing ones
    as roots at 0, leading ones as roots at infinity.

    Raises:
        RootOnCircleError: If a root has ||s| - 1| < 1e-8.
    """
    magnitudes = np.abs(coefficients)
    kept = np.flatnonzero(magnitudes > COEFFICIENT_CUTOFF * magnitudes.max())
    low, high = int(kept[0]), int(kept[-1])
    if high == low:
        return low

    roots = np.roots(coefficients[low : high + 1][::-1])
    radii = np.abs(roots)
    if np.any(np.abs(radii - 1.0) < ROOT_CIRCLE_TOLERANCE):
        raise RootOnCircleError(
            f"zero of det K on the unit circle: |s| = {radii[np.argmin(np.abs(radii - 1.0))]!r}"
        )
    return low + int(np.count_nonzero(radii < 1.0))


def laurent_winding(coeffs: Mapping[int, complex]) -> int:
    """Winding of a scalar Laurent polynomial sum_m c_m e^{imp}."""
    if not coeffs:
        raise ValueError("empty Laurent polynomial has no winding")
    lo, hi = min(coeffs), max(coeffs)
    dense = np.zeros(hi - lo + 1, dtype=complex)
    for m, c in coeffs.items():
        dense[m - lo] = c
    if not np.any(dense):
        raise ValueError("Laurent polynomial vanishes identically")
    return count_inside(dense) + lo


def winding_spherical(realization: Realization, field: CoefficientField) -> WindingResult:
    """det K = det K2 * prod_i (a lambda_i + b) with lambda_i the eigenvalues of K2^{-1} K1.

    Raises:
        ValueError: If the field is not a plain Laurent field.
        NearSingularError: If the pencil has infinite eigenvalues.
        RootOnCircleError: As in root counting, per scalar factor.
    """
    if not field.is_laurent:
        raise ValueError("spherical winding needs Laurent coefficients (not a gauged field)")

    lambdas = eigvals(realization.k1, realization.k2)
    if not np.all(np.isfinite(lambdas)):
        raise NearSingularError(f"K2 is singular (seed {realization.seed})")

    indices = sorted(set(field.a_coeffs) | set(field.b_coeffs))
    total = 0
    for lam in lambdas:
        scalar = {
            m: lam * field.a_coeffs.get(m, 0.0) + field.b_coeffs.get(m, 0.0) for m in indices
        }
        total += laurent_winding(scalar)
    return WindingResult(
        w=total,
        method=WindingMethod.SPHERICAL,
        grid_points_used=len(indices) * realization.n,
        refinement_depth=0,
    )


def compute_winding(
    realization: Realization,
    field: CoefficientField,
    method: WindingMethod = WindingMethod.PHASE_UNWRAP,
    **options,
) -> WindingResult:
    """Dispatch to the extraction named by ``method``."""
    if not isinstance(method, WindingMethod):
        raise TypeError(f"method must be WindingMethod, got {type(method).__name__}")
    if method is WindingMethod.PHASE_UNWRAP:
        return winding_unwrap(realization, field, **options)
    if method is WindingMethod.ROOT_COUNT:
        return winding_root_count(realization, field)
    return winding_spherical(realization, field)
