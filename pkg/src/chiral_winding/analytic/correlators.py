"""Generating function and k-point correlators of the winding density.

All closed forms assume a canonical field (||v|| = 1, v^dagger v' = 0). The
exponential exp(-N L(p, q)) is always evaluated as S(p, q)^N with
``complex_power``, which keeps the magnitude in log space and raises the unit
phase by repeated squaring.
"""

import itertools
import logging
import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from chiral_winding.analytic.curves import CurveSet
from chiral_winding.core.coeff_model import TWO_PI, CoefficientField, beta
from chiral_winding.errors import IllConditionedError, PoleEncounteredError

logger = logging.getLogger(__name__)

MAX_POINTS = 8
CONDITION_LIMIT = 1e12
SERIES_CUTOFF = 1e-4
COINCIDENCE_CUTOFF = 1e-3
RICHARDSON_STEP = 1e-2
GEN_FUNC_STEP = 0.05
POLE_FLOOR = 1e-14


def complex_power(z: ArrayLike, n: int) -> NDArray[np.complex128]:
    """z**n for integer n >= 0 without going through a complex logarithm."""
    if n < 0:
        raise ValueError(f"exponent must be non-negative, got {n}")
    z = np.asarray(z, dtype=complex)
    modulus = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = np.where(modulus > 0, z / modulus, 0.0)
        magnitude = np.where(modulus > 0, np.exp(n * np.log(modulus)), 0.0 if n else 1.0)

    result = np.ones_like(unit)
    base = unit
    exponent = n
    while exponent:
        if exponent & 1:
            result = result * base
            result /= np.where(np.abs(result) > 0, np.abs(result), 1.0)
        base = base * base
        base /= np.where(np.abs(base) > 0, np.abs(base), 1.0)
        exponent >>= 1
    return magnitude * result


def _points(p: ArrayLike) -> NDArray[np.float64]:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.ndim != 1 or p.size < 1:
        raise ValueError("points must be a non-empty 1-d sequence")
    if p.size > MAX_POINTS:
        raise ValueError(f"at most {MAX_POINTS} points are supported, got {p.size}")
    return p


def _require_canonical(field: CoefficientField) -> None:
    if not field.canonical:
        raise ValueError("closed forms require a canonical field; call canonicalize() first")


def _check_conditioning(matrix: NDArray, what: str) -> None:
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise IllConditionedError(
            f"{what} has condition number {condition:.3e}; points are too close to parallel"
        )


def gen_func(field: CoefficientField, n: int, p: ArrayLike, j: ArrayLike) -> complex:
    """Generating function Z(p, J) as a ratio of two k x k determinants.

    Both matrices carry the factor R_mn = beta(v(p_n), v(p_n + J_n)) /
    beta(v(p_m), v(p_n + J_n)) off the diagonal and 1 on it; the numerator
    multiplies it by S(p_m, p_n + J_n)^N.

    Raises:
        IllConditionedError: If either determinant is too ill-conditioned.
    """
    _require_canonical(field)
    p = _points(p)
    j = np.asarray(j, dtype=float).reshape(p.shape)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not np.any(j):
        return 1.0 + 0.0j

    v = field.evaluate(p)
    shifted = field.evaluate(p + j)

    numer_beta = beta(v, shifted)
    cross_beta = beta(v[:, None, :], shifted[None, :, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numer_beta[None, :] / cross_beta
    np.fill_diagonal(ratio, 1.0)
    if not np.all(np.isfinite(ratio)):
        raise IllConditionedError("v(p_m) is parallel to v(p_n + J_n) for some m != n")

    overlap = np.einsum("ma,na->mn", v.conj(), shifted)
    numerator = ratio * complex_power(overlap, n)

    _check_conditioning(ratio, "denominator")
    _check_conditioning(numerator, "numerator")
    return complex(np.linalg.det(numerator) / np.linalg.det(ratio))


@lru_cache(maxsize=MAX_POINTS)
def _permutations(k: int) -> NDArray[np.int64]:
    return np.array(list(itertools.permutations(range(k))), dtype=np.int64).reshape(-1, k)


def pair_determinant_sum(pairs: NDArray, kernel: NDArray) -> NDArray:
    """sum_l (-1)^l / (2^l l! (k-2l)!) sum_sigma prod_m pairs[...] det kernel[...].

    ``pairs`` and ``kernel`` have shape (..., k, k); the kernel diagonal is
    ignored. Leading axes are batch axes.
    """
    k = pairs.shape[-1]
    perms = _permutations(k)
    kernel = kernel * (1.0 - np.eye(k))
    total = np.zeros(pairs.shape[:-2], dtype=complex)

    for l in range(k // 2 + 1):
        weight = (-1) ** l / (2**l * math.factorial(l) * math.factorial(k - 2 * l))
        product = np.ones(pairs.shape[:-2] + (perms.shape[0],), dtype=complex)
        for m in range(l):
            product = product * pairs[..., perms[:, 2 * m], perms[:, 2 * m + 1]]

        rest = perms[:, 2 * l :]
        if rest.shape[1] == 0:
            determinant = np.ones_like(product)
        else:
            block = kernel[..., rest[:, :, None], rest[:, None, :]]
            determinant = np.linalg.det(block)
        total = total + weight * np.sum(product * determinant, axis=-1)
    return total


def _exact_kernels(field: CoefficientField, n: int, p: NDArray) -> tuple[NDArray, NDArray]:
    v = field.evaluate(p)
    delta = field.delta(p)
    b = beta(v[:, None, :], v[None, :, :])
    k = p.size
    off = ~np.eye(k, dtype=bool)
    if np.any(np.abs(b[off]) < 1e-14):
        raise IllConditionedError("two points have parallel vectors; use unfolded_corr")

    safe = np.where(off, b, 1.0)
    overlap = np.einsum("ma,na->mn", v.conj(), v)
    pairs = np.where(off, delta[:, None] * delta[None, :] / safe**2, 0.0)
    kernel = np.where(off, delta[None, :] / safe * complex_power(overlap, n), 0.0)
    return pairs, kernel


def corr_k(field: CoefficientField, n: int, p: ArrayLike) -> complex:
    """k-point correlator C_k(p) from the permutation sum over pairings.

    Raises:
        IllConditionedError: If two points have parallel vectors.
    """
    _require_canonical(field)
    p = _points(p)
    pairs, kernel = _exact_kernels(field, n, p)
    return complex(pair_determinant_sum(pairs, kernel))


def corr_1(field: CoefficientField, n: int, p: float) -> complex:
    """N v^dagger v' / v^dagger v; zero for a canonical field."""
    v = field.evaluate(p, 0)
    dv = field.evaluate(p, 1)
    return complex(n * np.vdot(v, dv) / np.vdot(v, v))


def corr_2(field: CoefficientField, n: int, p: ArrayLike) -> complex:
    """Delta_1 Delta_2 / beta_12^2 * (|S_12|^{2N} - 1)."""
    _require_canonical(field)
    p1, p2 = _points(p)
    v1, v2 = field.evaluate(p1), field.evaluate(p2)
    b12 = complex(beta(v1, v2))
    if abs(b12) < 1e-14:
        raise IllConditionedError("points have parallel vectors; use unfolded_corr")
    s12 = np.vdot(v1, v2)
    decay = float(np.exp(2 * n * np.log(abs(s12))))
    return complex(field.delta(p1) * field.delta(p2) / b12**2 * (decay - 1.0))


def corr_3(field: CoefficientField, n: int, p: ArrayLike) -> complex:
    """Delta_1 Delta_2 Delta_3 (X - conj X) / (beta_12 beta_23 beta_31), X = (S_12 S_23 S_31)^N."""
    _require_canonical(field)
    p = _points(p)
    if p.size != 3:
        raise ValueError("corr_3 needs exactly three points")
    v = field.evaluate(p)
    delta = field.delta(p)
    b = [complex(beta(v[a], v[c])) for a, c in ((0, 1), (1, 2), (2, 0))]
    if min(abs(x) for x in b) < 1e-14:
        raise IllConditionedError("two points have parallel vectors; use unfolded_corr")
    loop = np.vdot(v[0], v[1]) * np.vdot(v[1], v[2]) * np.vdot(v[2], v[0])
    x = complex(complex_power(loop, n))
    return complex(np.prod(delta) * (x - x.conjugate()) / (b[0] * b[1] * b[2]))


def f1_derivative(field: CoefficientField, n: int, p: ArrayLike, subset: Sequence[int]) -> complex:
    """Mixed J-derivative of the numerator determinant over ``subset`` at J = 0."""
    _require_canonical(field)
    p = _points(p)
    _, kernel = _exact_kernels(field, n, p)
    index = np.asarray(subset, dtype=np.int64)
    if index.size == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(kernel[np.ix_(index, index)]))


def f1_derivative_explicit(
    field: CoefficientField, n: int, p: ArrayLike, subset: Sequence[int]
) -> complex:
    """Closed forms of ``f1_derivative`` for two and three indices."""
    _require_canonical(field)
    p = _points(p)
    chosen = p[np.asarray(subset, dtype=np.int64)]
    v = field.evaluate(chosen)
    delta = field.delta(chosen)
    s = np.einsum("ma,na->mn", v.conj(), v)

    if chosen.size == 2:
        b12 = complex(beta(v[0], v[1]))
        decay = complex_power(s[0, 1] * s[1, 0], n)
        return complex(delta[0] * delta[1] / b12**2 * decay)

    if chosen.size == 3:
        b = complex(beta(v[0], v[1]) * beta(v[1], v[2]) * beta(v[2], v[0]))
        forward = complex_power(s[0, 1] * s[1, 2] * s[2, 0], n)
        backward = complex_power(s[0, 2] * s[2, 1] * s[1, 0], n)
        return complex(np.prod(delta) / b * (forward - backward))

    raise ValueError(f"explicit forms exist for 2 or 3 indices, got {chosen.size}")


def corr_from_gen_func(
    field: CoefficientField, n: int, p: ArrayLike, step: float | None = None, levels: int = 3
) -> complex:
    """Mixed J-derivative prod_l d/dJ_l of gen_func at J = 0.

    The mixed central difference D(h) has an error series in even powers of
    h, so D(h), D(h/2), ... are combined by Richardson extrapolation. The
    default h is GEN_FUNC_STEP times the shorter of 1/N and the smallest
    gap between points, the scale on which Z varies.
    """
    p = _points(p)
    k = p.size
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if step is None:
        scale = 1.0 / max(n, 1)
        if k > 1:
            gaps = np.diff(np.sort(np.mod(p, TWO_PI)))
            scale = min(scale, gaps.min(), TWO_PI - np.ptp(np.mod(p, TWO_PI)))
        step = GEN_FUNC_STEP * scale
    if step <= 0:
        raise ValueError("step must be positive; points must be distinct")

    def central(h: float) -> complex:
        total = 0.0 + 0.0j
        for signs in itertools.product((1.0, -1.0), repeat=k):
            signs = np.array(signs)
            total += np.prod(signs) * gen_func(field, n, p, signs * h)
        return total / (2.0 * h) ** k

    table = [central(step / 2**level) for level in range(levels)]
    for order in range(1, levels):
        factor = 4.0**order
        table = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(table, table[1:])]
    return complex(table[0])


def cauchy_identity_check(field: CoefficientField, p: ArrayLike, j: ArrayLike) -> float:
    """|1/det[(x_n - y_n)/(x_n - y_m)] - prod_{m<n} ...| with x = kappa(p + J), y = kappa(p).

    kappa = a/b is gauge invariant, so any field works.

    Raises:
        PoleEncounteredError: If b vanishes at a query point.
    """
    p = _points(p)
    j = np.asarray(j, dtype=float).reshape(p.shape)
    k = p.size

    def kappa(points: NDArray) -> NDArray:
        v = field.evaluate(points)
        if np.any(np.abs(v[:, 1]) < POLE_FLOOR * np.linalg.norm(v, axis=1)):
            raise PoleEncounteredError("b(p) vanishes: kappa = a/b has a pole")
        return v[:, 0] / v[:, 1]

    x = kappa(p + j)
    y = kappa(p)

    with np.errstate(divide="ignore", invalid="ignore"):
        matrix = (x - y)[None, :] / (x[None, :] - y[:, None])
    np.fill_diagonal(matrix, 1.0)
    lhs = 1.0 / np.linalg.det(matrix)

    rhs = 1.0 + 0.0j
    for m in range(k):
        for n_ in range(m + 1, k):
            rhs *= (x[m] - y[n_]) / (x[m] - x[n_]) * (x[n_] - y[m]) / (y[n_] - y[m])
    return float(abs(lhs - rhs))


def _unfolded_from_scaled(y: NDArray) -> NDArray:
    """Pairing sum with pairs 1/(y_a - y_b)^2 and kernel exp(-(y_a - y_b)^2/2)/(y_a - y_b)."""
    k = y.shape[-1]
    d = y[..., :, None] - y[..., None, :]
    off = ~np.eye(k, dtype=bool)
    safe = np.where(off, d, 1.0)
    pairs = np.where(off, 1.0 / safe**2, 0.0)
    kernel = np.where(off, np.exp(-0.5 * safe**2) / safe, 0.0)
    return pair_determinant_sum(pairs, kernel).real


def unfolded_sum(y: ArrayLike) -> NDArray[np.float64]:
    """Unfolded pairing sum at scaled arguments y_a = s_a |Delta_a| psi_a.

    Rows with nearly coincident arguments are evaluated at symmetric
    displacements +/- eps * a and extrapolated to eps = 0 by Richardson.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    k = y.shape[-1]
    result = np.empty(y.shape[0])

    if k == 1:
        return np.zeros(y.shape[0])

    d = np.abs(y[:, :, None] - y[:, None, :]) + np.eye(k)
    close = d.min(axis=(1, 2)) < COINCIDENCE_CUTOFF

    if np.any(~close):
        result[~close] = _unfolded_from_scaled(y[~close])
    if np.any(close):
        ramp = np.arange(k, dtype=float)

        def symmetric(eps: float) -> NDArray:
            return 0.5 * (
                _unfolded_from_scaled(y[close] + eps * ramp)
                + _unfolded_from_scaled(y[close] - eps * ramp)
            )

        result[close] = (4.0 * symmetric(0.5 * RICHARDSON_STEP) - symmetric(RICHARDSON_STEP)) / 3.0
    return result


def f2_scaled(x: ArrayLike) -> NDArray[np.float64]:
    """(exp(-x^2) - 1) / x^2 with its Taylor series near x = 0."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = np.abs(x) < SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.expm1(-x2) / np.where(small, 1.0, x2)
    series = -1.0 + x2 / 2.0 - x2 * x2 / 6.0
    return np.where(small, series, exact)


def _curve_factors(
    curveset: CurveSet, field: CoefficientField, curve_index: int, t: float, components: Sequence[int]
) -> tuple[NDArray, NDArray]:
    curve = curveset[curve_index]
    position = curve.position(t)
    velocity = curve.velocity(t)
    index = np.asarray(components, dtype=np.int64)
    signs = np.where(velocity[index] < 0, -1.0, 1.0)
    abs_delta = np.abs(field.delta(position[index]))
    return signs, abs_delta


def _components(k: int, components: Sequence[int] | None) -> tuple[int, ...]:
    if components is None:
        return tuple(a % 2 for a in range(k))
    if len(components) != k or any(c not in (0, 1) for c in components):
        raise ValueError(f"components must be {k} entries from {{0, 1}}, got {components}")
    return tuple(components)


def unfolded_corr(
    field: CoefficientField,
    curveset: CurveSet,
    curve_index: int,
    t: float,
    psi: ArrayLike,
    components: Sequence[int] | None = None,
) -> float:
    """Universal unfolded correlator f_k at base point Gamma_j(t).

    Point a of the k-tuple sits on component ``components[a]`` of the curve
    (default alternating 0, 1, 0, 1, ...). Odd k gives 0; k = 2 uses the
    closed two-point form.
    """
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    k = psi.size
    if k < 1 or k > MAX_POINTS:
        raise ValueError(f"k must be between 1 and {MAX_POINTS}, got {k}")
    if k % 2:
        return 0.0

    chosen = _components(k, components)
    signs, abs_delta = _curve_factors(curveset, field, curve_index, t, chosen)
    y = signs * abs_delta * psi
    prefactor = float(np.prod(signs * abs_delta))

    if k == 2:
        return prefactor * float(f2_scaled(y[0] - y[1]))
    return prefactor * float(unfolded_sum(y)[0])


def unfolded_corr_general(
    field: CoefficientField,
    curveset: CurveSet,
    curve_index: int,
    t: float,
    psi: ArrayLike,
    components: Sequence[int] | None = None,
) -> float:
    """f_k from the full pairing sum for any k, odd included."""
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    chosen = _components(psi.size, components)
    signs, abs_delta = _curve_factors(curveset, field, curve_index, t, chosen)
    y = signs * abs_delta * psi
    return float(np.prod(signs * abs_delta)) * float(unfolded_sum(y)[0])
