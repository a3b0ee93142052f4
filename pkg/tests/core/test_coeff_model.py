"""Tests for the coefficient field, its gauge and the local calculus."""

import math
import pickle

import numpy as np
import pytest

from chiral_winding.core.coeff_model import (
    TWO_PI,
    CoefficientField,
    ParallelPoint,
    beta,
    parallel_sign,
)
from chiral_winding.errors import BranchPointError, ModelError, NotParallelError

FIRST_HARMONIC = (0.92 + 0.82j, 0.91 - 0.77j, 0.41 - 0.95j, -0.84 - 0.70j)


@pytest.fixture(scope="module")
def first_harmonic():
    return CoefficientField.first_harmonic(*FIRST_HARMONIC)


@pytest.fixture(scope="module")
def first_harmonic_canonical(first_harmonic):
    return first_harmonic.canonicalize()


class TestConstruction:
    """Test building and validating coefficient fields."""

    def test_trigonometric_values(self):
        """v(p) = (cos p, sin p)."""
        field = CoefficientField.trigonometric()
        p = np.array([0.0, 0.3, math.pi / 2, 2.0])
        v = field.evaluate(p)

        np.testing.assert_allclose(v[:, 0], np.cos(p), atol=1e-14)
        np.testing.assert_allclose(v[:, 1], np.sin(p), atol=1e-14)

    def test_first_harmonic_at_zero(self, first_harmonic):
        """v(0) = (a1 + a2, b1 + b2) before canonicalization."""
        v = first_harmonic.evaluate(0.0)

        assert v[0] == pytest.approx(1.83 + 0.05j)
        assert v[1] == pytest.approx(-0.43 - 1.65j)

    def test_derivatives_match_finite_differences(self, first_harmonic):
        """Exact Laurent derivatives agree with central differences."""
        p, h = 1.1, 1e-5
        v = first_harmonic.evaluate
        numeric = (v(p + h) - v(p - h)) / (2 * h)

        np.testing.assert_allclose(first_harmonic.evaluate(p, 1), numeric, rtol=1e-8)

    def test_all_zero_coefficients_rejected(self):
        """a = b = 0 is not a model."""
        with pytest.raises(ModelError, match="empty"):
            CoefficientField({0: 0.0}, {0: 0.0})

    def test_vanishing_vector_rejected(self):
        """v(pi) = 0 for a = 1 + e^{ip}, b = 0."""
        with pytest.raises(ModelError, match="vanishes"):
            CoefficientField({0: 1.0, 1: 1.0}, {})

    def test_non_finite_coefficient_rejected(self):
        """NaN coefficients raise ModelError."""
        with pytest.raises(ModelError, match="not finite"):
            CoefficientField({0: float("nan")}, {1: 1.0})

    def test_non_integer_index_rejected(self):
        """Fourier indices must be integers."""
        with pytest.raises(TypeError):
            CoefficientField({0.5: 1.0}, {1: 1.0})

    def test_order_out_of_range(self):
        """Only v, v' and v'' are available."""
        with pytest.raises(ValueError, match="order"):
            CoefficientField.trigonometric().evaluate(0.0, 3)

    def test_index_range(self, first_harmonic):
        """Smallest and largest Fourier index."""
        assert first_harmonic.index_range == (0, 1)
        assert CoefficientField.trigonometric().index_range == (-1, 1)

    def test_model_hash_is_stable(self):
        """Equal coefficients give equal hashes; different ones differ."""
        first = CoefficientField.trigonometric()
        second = CoefficientField({-1: 0.5, 1: 0.5}, {-1: 0.5j, 1: -0.5j})
        other = CoefficientField({0: 1.0}, {1: 1.0})

        assert first.model_hash == second.model_hash
        assert first.model_hash != other.model_hash


class TestBilinear:
    """Test the tau_2 bilinear form."""

    def test_antisymmetric(self):
        """beta(u, w) = -beta(w, u) and beta(u, u) = 0."""
        u = np.array([1.0 + 2.0j, -0.5j])
        w = np.array([0.3, 1.0 - 1.0j])

        assert beta(u, w) == pytest.approx(-beta(w, u))
        assert beta(u, u) == pytest.approx(0.0)

    def test_vanishes_on_parallel_vectors(self):
        """beta(u, c u) = 0."""
        u = np.array([0.7 - 0.1j, 0.2 + 0.9j])

        assert abs(beta(u, (2.0 - 1.0j) * u)) < 1e-14


class TestCovariance:
    """Test S(p, q) = v^dagger(p) v(q)."""

    @pytest.mark.parametrize("canonical", [False, True], ids=["raw", "canonical"])
    def test_hermiticity(self, first_harmonic, canonical):
        """S(p, q) = conj S(q, p) on 1000 random pairs."""
        field = first_harmonic.canonicalize() if canonical else first_harmonic
        rng = np.random.default_rng(5)
        p, q = rng.uniform(0.0, TWO_PI, (2, 1000))

        np.testing.assert_allclose(field.covariance(p, q), field.covariance(q, p).conj(), rtol=0, atol=1e-12)

    def test_trigonometric_covariance(self):
        assert CoefficientField.trigonometric().covariance(0.3, 1.1) == pytest.approx(math.cos(0.8))


class TestCanonicalize:
    """Test the centering gauge."""

    def test_trigonometric_gauge_is_trivial(self):
        """(cos p, sin p) is already canonical; no table is built."""
        canonical = CoefficientField.trigonometric().canonicalize()

        assert canonical.canonical
        assert canonical.is_laurent
        assert canonical.berry_phase == 1.0
        norm_residual, tangent_residual = canonical.condition_residuals()
        assert norm_residual < 1e-12
        assert tangent_residual < 1e-12

    def test_constant_norm_is_rescaled(self):
        """A constant-norm field with zero phase rate is only rescaled."""
        field = CoefficientField({-1: 1.0, 1: 1.0}, {-1: 1.0j, 1: -1.0j})
        canonical = field.canonicalize()

        assert canonical.is_laurent
        np.testing.assert_allclose(canonical.evaluate(0.4), [math.cos(0.4), math.sin(0.4)], atol=1e-12)

    def test_first_harmonic_conditions(self, first_harmonic_canonical):
        """||v|| = 1 and v^dagger v' = 0 after the gauge; |B| = 1."""
        norm_residual, tangent_residual = first_harmonic_canonical.condition_residuals()

        assert abs(abs(first_harmonic_canonical.berry_phase) - 1.0) < 1e-8
        assert norm_residual < 1e-10
        assert tangent_residual < 1e-6

    def test_origin_hash_is_kept(self, first_harmonic, first_harmonic_canonical):
        """The canonical field reports the hash of the raw model."""
        assert first_harmonic_canonical.model_hash == first_harmonic.model_hash

    def test_canonicalize_is_idempotent(self, first_harmonic_canonical):
        """Canonicalizing a canonical field returns it unchanged."""
        assert first_harmonic_canonical.canonicalize() is first_harmonic_canonical

    def test_quasi_periodic_continuation(self, first_harmonic_canonical):
        """v(p + 2 pi) = B v(p) for the gauged field."""
        p = np.array([0.2, 1.7, 4.4])
        shifted = first_harmonic_canonical.evaluate(p + TWO_PI)
        expected = first_harmonic_canonical.berry_phase * first_harmonic_canonical.evaluate(p)

        np.testing.assert_allclose(shifted, expected, atol=1e-9)

    def test_gauged_derivative_matches_finite_differences(self, first_harmonic_canonical):
        """The analytic gauge derivative agrees with the tabulated phase."""
        p, h = 2.3, 1e-5
        v = first_harmonic_canonical.evaluate
        numeric = (v(p + h) - v(p - h)) / (2 * h)

        np.testing.assert_allclose(first_harmonic_canonical.evaluate(p, 1), numeric, atol=1e-6)

    def test_mean_phase_rate(self, first_harmonic, first_harmonic_canonical):
        """The Berry angle is the integral of Im(v^dagger v') / v^dagger v."""
        p = np.linspace(0.0, TWO_PI, 20001)
        v = first_harmonic.evaluate(p)
        dv = first_harmonic.evaluate(p, 1)
        rate = np.sum(v.conj() * dv, axis=-1).imag / np.sum(np.abs(v) ** 2, axis=-1)
        angle = np.trapezoid(rate, p) if hasattr(np, "trapezoid") else np.trapz(rate, p)

        assert first_harmonic_canonical.berry_angle == pytest.approx(angle, abs=1e-6)

    def test_grid_size_validation(self, first_harmonic):
        """Tables below 256 panels are refused."""
        with pytest.raises(ValueError, match="grid_size"):
            first_harmonic.canonicalize(grid_size=64)

    def test_pickle_round_trip(self, first_harmonic_canonical):
        """Fields cross process boundaries intact."""
        restored = pickle.loads(pickle.dumps(first_harmonic_canonical))
        p = np.array([0.1, 3.0, 7.5])

        np.testing.assert_allclose(restored.evaluate(p), first_harmonic_canonical.evaluate(p))
        assert restored.model_hash == first_harmonic_canonical.model_hash


class TestLocalCalculus:
    """Test Delta, the Lagrangian and the Hessian."""

    def test_delta_requires_canonical(self, first_harmonic):
        """Delta is only defined on the canonical field."""
        with pytest.raises(ValueError, match="canonical"):
            first_harmonic.delta(0.0)

    def test_trigonometric_delta(self):
        """|Delta| = 1 for (cos p, sin p)."""
        field = CoefficientField.trigonometric().canonicalize()
        p = np.linspace(0.0, TWO_PI, 17)

        np.testing.assert_allclose(np.abs(field.delta(p)), 1.0, atol=1e-14)

    def test_delta_matches_covariance_derivative(self, first_harmonic_canonical):
        """|Delta(p)|^2 = d1 d2 S(p, q) at q = p."""
        p, h = 0.0, 1e-4
        s = first_harmonic_canonical.covariance
        mixed = (s(p + h, p + h) - s(p + h, p - h) - s(p - h, p + h) + s(p - h, p - h)) / (4 * h * h)

        assert abs(first_harmonic_canonical.delta(p)) ** 2 == pytest.approx(mixed.real, rel=1e-5)

    def test_lagrangian_vanishes_on_diagonal(self, first_harmonic_canonical):
        """L(p, p) = 0 for a canonical field."""
        p = np.array([0.3, 2.0, 5.1])

        np.testing.assert_allclose(first_harmonic_canonical.lagrangian(p, p), 0.0, atol=1e-10)

    def test_real_part_non_negative(self, first_harmonic_canonical):
        """Re L(p, q) >= 0 everywhere."""
        rng = np.random.default_rng(3)
        p, q = rng.uniform(0.0, TWO_PI, (2, 200))

        assert np.all(first_harmonic_canonical.lagrangian(p, q).real >= -1e-12)

    def test_branch_point(self):
        """ln S is undefined where v(p) is orthogonal to v(q)."""
        field = CoefficientField.trigonometric().canonicalize()

        with pytest.raises(BranchPointError):
            field.lagrangian(0.0, math.pi / 2)

    def test_parallel_point(self):
        """v(pi) = -v(0) for the trigonometric model."""
        field = CoefficientField.trigonometric().canonicalize()
        point = field.parallel_point(0.0, math.pi)

        assert isinstance(point, ParallelPoint)
        assert point.phase == pytest.approx(-1.0)

    def test_not_parallel(self):
        """Generic points are rejected."""
        field = CoefficientField.trigonometric().canonicalize()

        with pytest.raises(NotParallelError):
            field.parallel_point(0.0, 0.5)

    def test_hessian_closed_form(self):
        """The closed form matches the analytic jet and is singular."""
        field = CoefficientField.trigonometric().canonicalize()
        for q in (0.0, math.pi):
            hessian = field.hessian(field.parallel_point(0.0, q))
            _, gradient, jet = field.re_lagrangian_jet(0.0, q)

            np.testing.assert_allclose(hessian, [[1.0, -1.0], [-1.0, 1.0]], atol=1e-12)
            np.testing.assert_allclose(jet, hessian, atol=1e-10)
            np.testing.assert_allclose(gradient, 0.0, atol=1e-12)
            assert abs(np.linalg.eigvalsh(hessian)).min() < 1e-12

    @pytest.mark.parametrize("p, q", [(0.0, 0.0), (0.0, math.pi), (1.0, 1.0), (2.5, 2.5 + math.pi)])
    def test_quadratic_expansion(self, p, q):
        """N [L(G + psi / sqrt(N)) - L(G)] = psi^T H psi / 2 + O(|psi|^3 / sqrt(N))."""
        field = CoefficientField.trigonometric().canonicalize()
        point = field.parallel_point(p, q)
        hessian = field.hessian(point)
        n = 1_000_000
        rng = np.random.default_rng(17)
        for _ in range(10):
            psi = rng.normal(size=2)
            psi *= 0.1 / np.linalg.norm(psi)
            shifted = np.array([p, q]) + psi / math.sqrt(n)
            ratio = complex(field.covariance(shifted[0], shifted[1])) / point.phase
            expansion = -n * np.log(ratio)

            assert abs(expansion - 0.5 * psi @ hessian @ psi) < 10 * 0.1**3 / math.sqrt(n)

    def test_parallel_sign(self):
        """s = sign Re[Delta*(p) Delta(q) S(q, p) / S(p, q)]."""
        assert parallel_sign(1.0, 1.0, 1.0) == 1
        assert parallel_sign(1.0, -1.0, 1.0) == -1
        assert parallel_sign(1j, 1j, 1j) == -1
