"""Coefficient vector field of the two-matrix model.

The model K(p) = a(p) K1 + b(p) K2 is fixed by the vector v(p) = (a(p), b(p)).
Coefficients are finite Laurent series in e^{ip}, so every derivative is exact
and det K(p) is a Laurent polynomial.

A *canonical* field additionally satisfies ||v(p)|| = 1 and v^dagger v' = 0 on
[0, 2*pi]. It is obtained from any field by ``canonicalize``, which multiplies
v(p) by a scalar gauge tabulated on a uniform grid.
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicHermiteSpline

from chiral_winding.core.quadrature import composite_rule
from chiral_winding.errors import BranchPointError, ModelError, NotParallelError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

VALIDATION_GRID = 1024
DEFAULT_GAUGE_GRID = 4096
GAUSS_NODES_PER_PANEL = 8

NORM_FLOOR = 1e-12
BRANCH_POINT_FLOOR = 1e-14
PARALLEL_TOLERANCE = 1e-10
PHASE_TOLERANCE = 1e-8


def beta(u: ArrayLike, w: ArrayLike) -> NDArray[np.complex128]:
    """Bilinear form u^T tau_2 w = i (u_2 w_1 - u_1 w_2).

    Works on the trailing axis, so stacks of vectors broadcast.
    """
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 1j * (u[..., 1] * w[..., 0] - u[..., 0] * w[..., 1])


def _laurent(coeffs: Mapping[int, complex], p: NDArray, order: int) -> NDArray:
    out = np.zeros(p.shape, dtype=complex)
    for m, c in coeffs.items():
        out += c * (1j * m) ** order * np.exp(1j * m * p)
    return out


def _normalize_series(series: Mapping[int, complex], name: str) -> Mapping[int, complex]:
    if not isinstance(series, Mapping):
        raise TypeError(f"{name} must be a mapping, got {type(series).__name__}")

    cleaned: dict[int, complex] = {}
    for index, value in series.items():
        if isinstance(index, bool) or not isinstance(index, (int, np.integer)):
            raise TypeError(f"{name} index must be int, got {type(index).__name__}")
        value = complex(value)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ModelError(f"{name}[{index}] is not finite: {value}")
        if value != 0:
            cleaned[int(index)] = value
    return MappingProxyType(dict(sorted(cleaned.items())))


@dataclass(frozen=True, eq=False)
class GaugeTable:
    """Tabulated phase of the centering gauge.

    Attributes:
        grid_size: Number of panels of the uniform grid on [0, 2*pi].
        theta: theta(p_i) = int_0^{p_i} Im(v^dagger v') / (v^dagger v) dq.
        berry_angle: theta(2*pi); the Berry phase is exp(-i * berry_angle).
    """

    grid_size: int
    theta: NDArray[np.float64]
    berry_angle: float
    spline: CubicHermiteSpline = field(repr=False)

    @property
    def berry_phase(self) -> complex:
        return complex(np.exp(-1j * self.berry_angle))

    def phase(self, p: NDArray) -> NDArray[np.float64]:
        """theta(p), continued quasi-periodically outside [0, 2*pi]."""
        winds = np.floor(p / TWO_PI)
        rest = np.clip(p - TWO_PI * winds, 0.0, TWO_PI)
        return self.spline(rest) + winds * self.berry_angle


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Vector field v(p) = (a(p), b(p)) with a, b finite Laurent series.

    Attributes:
        a_coeffs: Fourier index m -> coefficient of e^{imp} in a(p).
        b_coeffs: Same for b(p).
        canonical: True once the field satisfies ||v|| = 1 and v^dagger v' = 0.
        gauge_table: Tabulated gauge, present only for a nontrivial gauge.
        origin_hash: Hash of the model this field was derived from.
    """

    a_coeffs: Mapping[int, complex]
    b_coeffs: Mapping[int, complex]
    canonical: bool = False
    gauge_table: GaugeTable | None = None
    origin_hash: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_coeffs", _normalize_series(self.a_coeffs, "a"))
        object.__setattr__(self, "b_coeffs", _normalize_series(self.b_coeffs, "b"))

        if not self.a_coeffs and not self.b_coeffs:
            raise ModelError("coefficient series are empty: v(p) vanishes identically")
        if self.gauge_table is not None and not self.canonical:
            raise ValueError("gauge_table is only allowed on canonical fields")

        grid = np.linspace(0.0, TWO_PI, VALIDATION_GRID, endpoint=False)
        raw = self._raw(grid, 0)
        norms = np.linalg.norm(raw, axis=-1)
        if norms.min() < NORM_FLOOR:
            at = grid[int(np.argmin(norms))]
            raise ModelError(f"v(p) vanishes near p = {at:.6f}")

        if self.canonical:
            v = self.evaluate(grid, 0)
            dv = self.evaluate(grid, 1)
            norm_residual = np.abs(np.sum(np.abs(v) ** 2, axis=-1) - 1.0).max()
            tangent_residual = np.abs(np.sum(v.conj() * dv, axis=-1)).max()
            if norm_residual > 1e-10 or tangent_residual > 1e-8:
                raise ModelError(
                    "canonical field violates ||v|| = 1 / v^dagger v' = 0: "
                    f"residuals {norm_residual:.2e}, {tangent_residual:.2e}"
                )

    @classmethod
    def trigonometric(cls) -> "CoefficientField":
        """v(p) = (cos p, sin p)."""
        return cls({-1: 0.5, 1: 0.5}, {-1: 0.5j, 1: -0.5j})

    @classmethod
    def first_harmonic(
        cls, a1: complex, a2: complex, b1: complex, b2: complex
    ) -> "CoefficientField":
        """a(p) = a1 + a2 e^{ip}, b(p) = b1 + b2 e^{ip}."""
        return cls({0: a1, 1: a2}, {0: b1, 1: b2})

    @property
    def index_range(self) -> tuple[int, int]:
        """Smallest and largest Fourier index carried by a or b."""
        indices = list(self.a_coeffs) + list(self.b_coeffs)
        return min(indices), max(indices)

    @property
    def is_laurent(self) -> bool:
        """True when v(p) is exactly its Laurent series (no tabulated gauge)."""
        return self.gauge_table is None

    @property
    def berry_phase(self) -> complex:
        if self.gauge_table is None:
            return 1.0 + 0.0j
        return self.gauge_table.berry_phase

    @property
    def berry_angle(self) -> float:
        if self.gauge_table is None:
            return 0.0
        return self.gauge_table.berry_angle

    @property
    def is_periodic(self) -> bool:
        return self.gauge_table is None or abs(self.berry_phase - 1.0) < 1e-10

    @property
    def model_hash(self) -> str:
        """Stable hash of the underlying Laurent model."""
        if self.origin_hash is not None:
            return self.origin_hash
        digest = hashlib.sha256()
        for name, series in (("a", self.a_coeffs), ("b", self.b_coeffs)):
            for m, c in series.items():
                digest.update(f"{name}[{m}]={c.real!r},{c.imag!r};".encode())
        return digest.hexdigest()[:16]

    def _raw(self, p: NDArray, order: int) -> NDArray[np.complex128]:
        a = _laurent(self.a_coeffs, p, order)
        b = _laurent(self.b_coeffs, p, order)
        return np.stack([a, b], axis=-1)

    def evaluate(self, p: ArrayLike, order: int = 0) -> NDArray[np.complex128]:
        """v(p), v'(p) or v''(p); trailing axis holds the two components.

        For a tabulated gauge the field is h(p) v(p) with h = exp(-i theta)/||v||.
        Its derivatives use the analytic log-derivative
        h'/h = -v^dagger v' / v^dagger v, never the table.
        """
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")

        p = np.asarray(p, dtype=float)
        if self.gauge_table is None:
            return self._raw(p, order)

        v0 = self._raw(p, 0)
        norm2 = np.sum(np.abs(v0) ** 2, axis=-1)
        h = np.exp(-1j * self.gauge_table.phase(p)) / np.sqrt(norm2)
        if order == 0:
            return h[..., None] * v0

        v1 = self._raw(p, 1)
        overlap = np.sum(v0.conj() * v1, axis=-1)
        lam1 = -overlap / norm2
        if order == 1:
            return (h * lam1)[..., None] * v0 + h[..., None] * v1

        v2 = self._raw(p, 2)
        d_overlap = np.sum(np.abs(v1) ** 2, axis=-1) + np.sum(v0.conj() * v2, axis=-1)
        lam2 = -(d_overlap / norm2 - overlap * 2.0 * overlap.real / norm2**2)
        h2 = h * (lam2 + lam1**2)
        return h2[..., None] * v0 + (2.0 * h * lam1)[..., None] * v1 + h[..., None] * v2

    def covariance(self, p: ArrayLike, q: ArrayLike) -> NDArray[np.complex128]:
        """S(p, q) = v^dagger(p) v(q)."""
        return np.sum(self.evaluate(p).conj() * self.evaluate(q), axis=-1)

    def delta(self, p: ArrayLike) -> NDArray[np.complex128]:
        """Delta(p) = v^T(p) tau_2 v'(p); |Delta|^2 = d1 d2 S(p, p)."""
        self._require_canonical("delta")
        return beta(self.evaluate(p, 0), self.evaluate(p, 1))

    def lagrangian(self, p: ArrayLike, q: ArrayLike) -> NDArray[np.complex128]:
        """L(p, q) = -ln S(p, q) on the principal branch.

        Raises:
            BranchPointError: If |S(p, q)| < 1e-14 (orthogonal vectors).
        """
        self._require_canonical("lagrangian")
        s = self.covariance(p, q)
        if np.any(np.abs(s) < BRANCH_POINT_FLOOR):
            raise BranchPointError(
                "ln S(p, q) undefined: v(p) and v(q) are orthogonal"
            )
        return -np.log(s)

    def re_lagrangian_jet(
        self, p: float, q: float
    ) -> tuple[float, NDArray[np.float64], NDArray[np.float64]]:
        """Value, gradient and Hessian of Re L at (p, q), analytically."""
        vp = [self.evaluate(p, k) for k in range(3)]
        vq = [self.evaluate(q, k) for k in range(3)]
        s = np.vdot(vp[0], vq[0])
        if abs(s) < BRANCH_POINT_FLOOR:
            raise BranchPointError(f"ln S undefined at ({p:.6f}, {q:.6f})")

        lp = np.vdot(vp[1], vq[0]) / s
        lq = np.vdot(vp[0], vq[1]) / s
        lpp = np.vdot(vp[2], vq[0]) / s - lp**2
        lqq = np.vdot(vp[0], vq[2]) / s - lq**2
        lpq = np.vdot(vp[1], vq[1]) / s - lp * lq

        value = -math.log(abs(s))
        gradient = -np.array([lp.real, lq.real])
        hessian = -np.array([[lpp.real, lpq.real], [lpq.real, lqq.real]])
        return value, gradient, hessian

    def parallel_point(self, p: float, q: float) -> "ParallelPoint":
        """Validated ParallelPoint at (p, q)."""
        self._require_canonical("parallel_point")
        s = complex(self.covariance(p, q))
        re_l = -math.log(abs(s)) if abs(s) > 0 else math.inf
        if re_l > PARALLEL_TOLERANCE or abs(abs(s) - 1.0) > PHASE_TOLERANCE:
            raise NotParallelError(
                f"v({p:.6f}) and v({q:.6f}) are not parallel: Re L = {re_l:.3e}"
            )
        return ParallelPoint(p=float(p), q=float(q), phase=s)

    def hessian(self, point: "ParallelPoint") -> NDArray[np.float64]:
        """Hessian of L at a parallel point in its closed form.

        [[|D(p)|^2, -s|D(p)D(q)|], [-s|D(p)D(q)|, |D(q)|^2]] with
        s = sign Re[D*(p) D(q) S(q, p) / S(p, q)].
        """
        checked = self.parallel_point(point.p, point.q)
        dp = complex(self.delta(checked.p))
        dq = complex(self.delta(checked.q))
        s_pq = checked.phase
        sign = parallel_sign(dp, dq, s_pq)
        cross = -sign * abs(dp) * abs(dq)
        return np.array([[abs(dp) ** 2, cross], [cross, abs(dq) ** 2]])

    def canonicalize(self, grid_size: int = DEFAULT_GAUGE_GRID) -> "CoefficientField":
        """Normalize and gauge the field so that ||v|| = 1 and v^dagger v' = 0.

        The gauge f(p) = exp(-int_0^p v^dagger v' / v^dagger v dq) is tabulated
        on ``grid_size`` uniform panels with cumulative Gauss-Legendre
        quadrature. The result is in general not 2*pi-periodic.

        Raises:
            ModelError: If ||v(p)|| < 1e-12 somewhere on the grid.
        """
        if not isinstance(grid_size, int) or grid_size < 256:
            raise ValueError(f"grid_size must be int >= 256, got {grid_size}")

        if self.canonical:
            return self

        grid = np.linspace(0.0, TWO_PI, grid_size + 1)
        nodes, weights = composite_rule(0.0, TWO_PI, grid_size, GAUSS_NODES_PER_PANEL)
        increments = np.sum(self._phase_rate(nodes) * weights, axis=1)
        theta = np.concatenate([[0.0], np.cumsum(increments)])

        norms = np.linalg.norm(self._raw(grid, 0), axis=-1)
        origin = self.model_hash

        if np.abs(theta).max() < 1e-12 and np.ptp(norms) < 1e-12:
            scale = norms[0]
            logger.info("gauge is trivial; rescaling coefficients by 1/%.6g", scale)
            return CoefficientField(
                {m: c / scale for m, c in self.a_coeffs.items()},
                {m: c / scale for m, c in self.b_coeffs.items()},
                canonical=True,
                origin_hash=origin,
            )

        spline = CubicHermiteSpline(grid, theta, self._phase_rate(grid))
        table = GaugeTable(
            grid_size=grid_size,
            theta=theta,
            berry_angle=float(theta[-1]),
            spline=spline,
        )
        logger.info(
            "gauge tabulated on %d panels, Berry phase %.6f%+.6fi",
            grid_size,
            table.berry_phase.real,
            table.berry_phase.imag,
        )
        return CoefficientField(
            self.a_coeffs,
            self.b_coeffs,
            canonical=True,
            gauge_table=table,
            origin_hash=origin,
        )

    def condition_residuals(self, grid_size: int = VALIDATION_GRID) -> tuple[float, float]:
        """max | ||v||^2 - 1 | and max |v^dagger v'| on a uniform grid."""
        grid = np.linspace(0.0, TWO_PI, grid_size, endpoint=False)
        v = self.evaluate(grid, 0)
        dv = self.evaluate(grid, 1)
        norm_residual = float(np.abs(np.sum(np.abs(v) ** 2, axis=-1) - 1.0).max())
        tangent_residual = float(np.abs(np.sum(v.conj() * dv, axis=-1)).max())
        return norm_residual, tangent_residual

    def _phase_rate(self, p: NDArray) -> NDArray[np.float64]:
        v0 = self._raw(p, 0)
        v1 = self._raw(p, 1)
        norm2 = np.sum(np.abs(v0) ** 2, axis=-1)
        if norm2.min() < NORM_FLOOR**2:
            raise ModelError("v(p) vanishes on the gauge grid")
        return np.sum(v0.conj() * v1, axis=-1).imag / norm2

    def _require_canonical(self, what: str) -> None:
        if not self.canonical:
            raise ValueError(f"{what} requires a canonical field; call canonicalize() first")

    def __reduce__(self):
        # mappingproxy does not pickle; worker processes need the field
        return (
            CoefficientField,
            (
                dict(self.a_coeffs),
                dict(self.b_coeffs),
                self.canonical,
                self.gauge_table,
                self.origin_hash,
            ),
        )

    def __repr__(self) -> str:
        lo, hi = self.index_range
        kind = "canonical" if self.canonical else "raw"
        gauge = ", gauged" if self.gauge_table is not None else ""
        return f"CoefficientField(m={lo}..{hi}, {kind}{gauge})"


@dataclass(frozen=True)
class ParallelPoint:
    """Point (p, q) with v(p) parallel to v(q); phase = S(p, q), |phase| = 1."""

    p: float
    q: float
    phase: complex


def parallel_sign(delta_p: complex, delta_q: complex, s_pq: complex) -> int:
    """s(p, q) = sign[Delta*(p) Delta(q) S(q, p) / S(p, q)]."""
    value = (np.conj(delta_p) * delta_q * np.conj(s_pq) / s_pq).real
    return -1 if value < 0 else 1
