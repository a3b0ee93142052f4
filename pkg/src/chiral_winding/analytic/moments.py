"""Large-N predictions for the winding-number distribution.

The centered winding number becomes Gaussian with variance sqrt(N) * I2,
where I2 is an integral along the parallelism curves.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import factorial2

from chiral_winding.analytic.correlators import f2_scaled, unfolded_sum
from chiral_winding.analytic.curves import CurveSet, curve_branches
from chiral_winding.core.coeff_model import TWO_PI, CoefficientField
from chiral_winding.core.quadrature import composite_rule

I2_PANELS = 64
I3_PANELS = 16
I3_PSI_NODES = 24
I3_PSI_RANGE = 6.0


@dataclass(frozen=True)
class MomentPrediction:
    """Leading-order central moment <(W - <W>)^k>.

    Attributes:
        order: Moment order k.
        leading_value: (k-1)!! N^{k/4} I2^{k/2} for even k, 0 for odd k.
        error_order: Power of N of the first neglected term.
        i2: Variance coefficient used.
    """

    order: int
    leading_value: float
    error_order: float
    i2: float

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.order % 2 == 0 and self.leading_value <= 0:
            raise ValueError("even moments must be positive")
        if self.order % 2 == 1 and self.leading_value != 0:
            raise ValueError("odd moments vanish at leading order")


@dataclass(frozen=True)
class ShapePrediction:
    skewness: float
    skewness_decay_order: float
    kurtosis: float


def predict_moments(n: int, k: int, i2: float) -> MomentPrediction:
    """Gaussian central moment of order k for dimension n.

    Even k = 2m: (2m-1)!! N^{m/2} I2^m with error O(N^{(m-1)/2}).
    Odd k = 2m+1: 0 with error O(N^{(m-1)/2}).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if i2 <= 0:
        raise ValueError(f"i2 must be positive, got {i2}")

    m = k // 2
    error_order = (m - 1) / 2
    if k % 2:
        return MomentPrediction(order=k, leading_value=0.0, error_order=error_order, i2=i2)

    value = float(factorial2(2 * m - 1, exact=True)) * n ** (m / 2) * i2**m
    return MomentPrediction(order=k, leading_value=value, error_order=error_order, i2=i2)


def predict_shape(n: int, i2: float) -> ShapePrediction:
    """Skewness 0 decaying like N^{-3/4}; kurtosis 3."""
    if n < 1 or i2 <= 0:
        raise ValueError("n and i2 must be positive")
    return ShapePrediction(skewness=0.0, skewness_decay_order=-0.75, kurtosis=3.0)


def predict_mean(field: CoefficientField, n: int) -> float:
    """<W> = N theta(2 pi) / (2 pi), with theta the Berry angle of the centering gauge."""
    canonical = field if field.canonical else field.canonicalize()
    return n * canonical.berry_angle / TWO_PI


def gaussian_pdf(w, mean: float, n: int, i2: float):
    """(2 pi sqrt(N) I2)^{-1/2} exp(-(w - mean)^2 / (2 sqrt(N) I2))."""
    if i2 <= 0:
        raise ValueError(f"i2 must be positive, got {i2}")
    variance = math.sqrt(n) * i2
    w = np.asarray(w, dtype=float)
    value = np.exp(-((w - mean) ** 2) / (2.0 * variance)) / math.sqrt(TWO_PI * variance)
    return float(value) if value.ndim == 0 else value


def i2(field: CoefficientField, curveset: CurveSet, panels: int = I2_PANELS) -> float:
    """Variance coefficient I2 by composite Gauss-Legendre along every curve.

    I2 = (1 / 2 pi^{3/2}) sum_j int dt s1 s2 |Delta_1| |Delta_2| ||Gamma'||
         / sqrt(|Delta_1|^2 + |Delta_2|^2).
    """
    nodes, weights = composite_rule(0.0, TWO_PI, panels)
    nodes, weights = nodes.ravel(), weights.ravel()

    total = 0.0
    for curve in curveset:
        position = curve.position(nodes)
        velocity = curve.velocity(nodes)
        abs_delta = np.abs(field.delta(position))
        signs = np.where(velocity < 0, -1.0, 1.0)
        integrand = (
            signs[:, 0]
            * signs[:, 1]
            * abs_delta[:, 0]
            * abs_delta[:, 1]
            * np.linalg.norm(velocity, axis=1)
            / np.linalg.norm(abs_delta, axis=1)
        )
        total += float(integrand @ weights)
    return total / (2.0 * math.pi**1.5)


def i2_from_unfolded(field: CoefficientField, curveset: CurveSet, panels: int = 16) -> float:
    """I2 from the unfolded two-point function integrated across each curve.

    sum_j int dt / (2 pi i)^2 int dpsi ||Gamma'||^2 / |Gamma'_2|
    f2(Gamma, psi, -Gamma'_1 / Gamma'_2 psi).
    """
    nodes, weights = composite_rule(0.0, TWO_PI, panels)
    nodes, weights = nodes.ravel(), weights.ravel()

    total = 0.0
    for curve in curveset:
        position = curve.position(nodes)
        velocity = curve.velocity(nodes)
        abs_delta = np.abs(field.delta(position))
        for i in range(nodes.size):
            signs = np.where(velocity[i] < 0, -1.0, 1.0)
            scale = signs * abs_delta[i]
            slope = -velocity[i, 0] / velocity[i, 1]
            rate = scale[0] - scale[1] * slope

            def f2(psi: float) -> float:
                return float(np.prod(scale)) * float(f2_scaled(rate * psi))

            inner, _ = quad(f2, -np.inf, np.inf, limit=200)
            jacobian = float(velocity[i] @ velocity[i]) / abs(velocity[i, 1])
            total += weights[i] * jacobian * inner
    return -total / (TWO_PI**2)


def i3(
    field: CoefficientField,
    curveset: CurveSet,
    panels: int = I3_PANELS,
    psi_nodes: int = I3_PSI_NODES,
    psi_range: float = I3_PSI_RANGE,
) -> complex:
    """Third-order curve integral over all triple curves (t, q_a(t), q_b(t)).

    The integrand is the full pairing sum for f3, so the result measures how
    well the odd unfolded correlators cancel.
    """
    nodes, weights = composite_rule(0.0, TWO_PI, panels)
    nodes, weights = nodes.ravel(), weights.ravel()
    psi, psi_weights = composite_rule(-psi_range, psi_range, 1, psi_nodes)
    psi, psi_weights = psi.ravel(), psi_weights.ravel()
    psi1, psi2 = np.meshgrid(psi, psi, indexing="ij")
    plane_weights = np.outer(psi_weights, psi_weights).ravel()
    psi1, psi2 = psi1.ravel(), psi2.ravel()

    branches = curve_branches(curveset)
    delta_p = np.abs(field.delta(nodes))

    total = 0.0
    for first in branches:
        q1, dq1 = first.q(nodes), first.dq(nodes)
        delta_1 = np.abs(field.delta(q1))
        for second in branches:
            q2, dq2 = second.q(nodes), second.dq(nodes)
            delta_2 = np.abs(field.delta(q2))
            for i in range(nodes.size):
                tangent = np.array([1.0, dq1[i], dq2[i]])
                signs = np.where(tangent < 0, -1.0, 1.0)
                abs_delta = np.array([delta_p[i], delta_1[i], delta_2[i]])
                psi3 = -(tangent[0] * psi1 + tangent[1] * psi2) / tangent[2]
                y = signs * abs_delta * np.column_stack([psi1, psi2, psi3])
                f3 = float(np.prod(signs * abs_delta)) * unfolded_sum(y)
                jacobian = float(tangent @ tangent) / abs(tangent[2])
                total += weights[i] * jacobian * float(f3 @ plane_weights)
    return total / (2j * math.pi) ** 3
