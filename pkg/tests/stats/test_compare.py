"""Tests for judging estimates against predictions."""

import math

import numpy as np
import pytest

from chiral_winding.analytic.moments import predict_moments
from chiral_winding.core.winding import WindingMethod
from chiral_winding.errors import MismatchedConfigError
from chiral_winding.stats.compare import Prediction, compare, moment_prediction
from chiral_winding.stats.montecarlo import CorrelatorEstimate, MomentEstimate, MomentReport


def make_correlator(estimate=1.0, std_error=0.1, n=4, model_hash="abc"):
    return CorrelatorEstimate(
        points=(0.5, 1.0),
        k=2,
        estimate=complex(estimate),
        std_error=std_error,
        samples=100,
        excluded=0,
        n=n,
        model_hash=model_hash,
        master_seed=0,
    )


def make_report(mu2=10.0, predicted_mu2=9.0, std_error=0.1):
    predictions = tuple(predict_moments(64, k, 1.0) for k in range(1, 7))
    moments = []
    for prediction in predictions:
        k = prediction.order
        value = mu2 if k == 2 else prediction.leading_value
        predicted = predicted_mu2 if k == 2 else prediction.leading_value
        moments.append(MomentEstimate(f"mu{k}", value, std_error, predicted, 0.0))
    return MomentReport(
        n=64,
        samples=1000,
        excluded=0,
        central_moments=tuple(moments),
        skewness=MomentEstimate("skewness", 0.01, 0.05, 0.0, 0.2),
        kurtosis=MomentEstimate("kurtosis", 2.9, 0.1, 3.0, -1.0),
        predicted=predictions,
        i2=1.0,
        model_hash="abc",
        master_seed=0,
        method=WindingMethod.PHASE_UNWRAP,
        windings=np.zeros(1000, dtype=np.int64),
    )


class TestPrediction:
    """Test prediction validation."""

    def test_tolerance_for_unknown_quantity(self):
        with pytest.raises(ValueError, match="unknown quantity"):
            Prediction(4, "abc", {"mu2": 1.0}, rel_tol={"mu4": 0.1})

    def test_values_are_read_only(self):
        prediction = Prediction(4, "abc", {"corr": 1.0})

        with pytest.raises(TypeError):
            prediction.values["corr"] = 2.0


class TestCompare:
    """Test per-quantity verdicts."""

    def test_exact_match_passes(self):
        verdict = compare(make_correlator(), Prediction(4, "abc", {"corr": 1.0}))

        assert verdict.passed
        assert verdict.quantities[0].z_score == 0.0
        assert verdict.lines()[-1] == "overall: PASS"

    def test_five_sigma_fails(self):
        verdict = compare(make_correlator(), Prediction(4, "abc", {"corr": 1.5}))

        assert not verdict.passed
        assert verdict.failures == ["corr"]
        assert verdict.quantities[0].z_score == pytest.approx(-5.0)
        assert verdict.lines()[0].startswith("FAIL")
        assert verdict.lines()[-1] == "overall: FAIL"

    def test_relative_tolerance_rescues(self):
        prediction = Prediction(4, "abc", {"corr": 1.5}, rel_tol={"corr": 0.4})

        assert compare(make_correlator(), prediction).passed

    def test_absolute_tolerance_rescues(self):
        prediction = Prediction(4, "abc", {"corr": 1.5}, abs_tol={"corr": 0.6})

        assert compare(make_correlator(), prediction).passed

    def test_bound_must_hold_as_well(self):
        result = make_correlator(estimate=1.1)

        assert compare(result, Prediction(4, "abc", {"corr": 1.0}, bounds={"corr": 0.2})).passed
        assert not compare(result, Prediction(4, "abc", {"corr": 1.0}, bounds={"corr": 0.05})).passed

    def test_complex_deviation(self):
        """|z| uses the modulus of a complex deviation."""
        verdict = compare(make_correlator(estimate=1.0 + 1.0j, std_error=0.5), Prediction(4, "abc", {"corr": 1.0}))

        assert verdict.quantities[0].z_score == pytest.approx(2.0)
        assert verdict.passed

    def test_zero_error_mismatch(self):
        verdict = compare(make_correlator(std_error=0.0), Prediction(4, "abc", {"corr": 2.0}))

        assert not verdict.passed
        assert math.isinf(verdict.quantities[0].z_score)
        assert verdict.summary()["quantities"][0]["z_score"] is None

    def test_mismatched_n(self):
        with pytest.raises(MismatchedConfigError, match="n differs"):
            compare(make_correlator(n=8), Prediction(4, "abc", {"corr": 1.0}))

    def test_mismatched_model(self):
        with pytest.raises(MismatchedConfigError, match="model hash"):
            compare(make_correlator(), Prediction(4, "xyz", {"corr": 1.0}))

    def test_missing_quantity(self):
        with pytest.raises(KeyError):
            compare(make_correlator(), Prediction(4, "abc", {"mu2": 1.0}))

    def test_summary(self):
        summary = compare(make_correlator(), Prediction(4, "abc", {"corr": 1.0})).summary()

        assert summary["passed"] is True
        assert summary["n"] == 4
        assert summary["quantities"][0]["name"] == "corr"
        assert summary["quantities"][0]["estimate"] == 1.0


class TestMomentPrediction:
    """Test the default prediction derived from a report."""

    def test_names_and_tolerance(self):
        prediction = moment_prediction(make_report())

        assert set(prediction.values) == {f"mu{k}" for k in range(1, 7)} | {"skewness", "kurtosis"}
        assert prediction.rel_tol == {"mu2": 0.15}
        assert prediction.values["kurtosis"] == 3.0

    def test_variance_within_tolerance_passes(self):
        """mu2 is 11% off and 10 sigma away, but inside the 15% band."""
        report = make_report(mu2=10.0, predicted_mu2=9.0)
        verdict = compare(report, moment_prediction(report))

        assert verdict.passed

    def test_variance_outside_tolerance_fails(self):
        report = make_report(mu2=12.0, predicted_mu2=9.0)
        verdict = compare(report, moment_prediction(report))

        assert verdict.failures == ["mu2"]
