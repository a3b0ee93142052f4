"""Tests for the JSON artifacts."""

import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from chiral_winding.analytic.moments import predict_moments
from chiral_winding.core.winding import WindingMethod
from chiral_winding.export.report import (
    SCHEMA_VERSION,
    correlator_record,
    moment_report_record,
    prediction_from_document,
    prediction_record,
    provenance_comments,
    read_document,
    result_from_document,
    verdict_record,
    write_document,
)
from chiral_winding.stats.compare import Prediction, compare
from chiral_winding.stats.montecarlo import CorrelatorEstimate, MomentEstimate, MomentReport


@pytest.fixture
def report():
    predictions = tuple(predict_moments(16, k, 1.25) for k in range(1, 7))
    moments = tuple(
        MomentEstimate(f"mu{p.order}", 0.5 + p.order, 0.1 * p.order, p.leading_value, 1.0)
        for p in predictions
    )
    return MomentReport(
        n=16,
        samples=10,
        excluded=1,
        central_moments=moments,
        skewness=MomentEstimate("skewness", 0.2, 0.0, 0.0, math.inf),
        kurtosis=MomentEstimate("kurtosis", 2.5, 0.3, 3.0, -1.6666),
        predicted=predictions,
        i2=1.25,
        model_hash="0123456789abcdef",
        master_seed=7,
        method=WindingMethod.ROOT_COUNT,
        windings=np.array([0, 1, -1, 2, 0, 0, 1, -2, 3], dtype=np.int64),
    )


@pytest.fixture
def correlator():
    return CorrelatorEstimate(
        points=(0.5, 1.5),
        k=2,
        estimate=-1.25 + 0.5j,
        std_error=0.3,
        samples=500,
        excluded=2,
        n=8,
        model_hash="0123456789abcdef",
        master_seed=3,
    )


class TestDocuments:
    """Test writing and reading documents."""

    def test_envelope(self, correlator):
        config = {"n": 8, "method": WindingMethod.PHASE_UNWRAP, "out": Path("results"), "mc": {"samples": 5}}
        with tempfile.TemporaryDirectory() as tmpdir:
            path = write_document(Path(tmpdir) / "a" / "doc.json", correlator_record(correlator), config, "hash")
            document = json.loads(path.read_text())
            text = path.read_text()

        assert document["schema_version"] == SCHEMA_VERSION
        assert document["model_hash"] == "hash"
        assert document["config"] == {"method": "phase_unwrap", "mc": {"samples": 5}, "n": 8, "out": "results"}
        assert document["result"]["kind"] == "correlator_estimate"
        assert text.endswith("}\n")

    def test_rewrite_is_byte_identical(self, report):
        with tempfile.TemporaryDirectory() as tmpdir:
            first = write_document(Path(tmpdir) / "1.json", moment_report_record(report), {"seed": 7}, "h")
            second = write_document(Path(tmpdir) / "2.json", moment_report_record(report), {"seed": 7}, "h")

            assert first.read_bytes() == second.read_bytes()

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError, match="Artifact not found"):
            read_document("/nonexistent/doc.json")

    def test_invalid_json(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "bad.json"
            path.write_text("{not json")

            with pytest.raises(ValueError, match="Invalid JSON"):
                read_document(path)

    def test_wrong_schema(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "old.json"
            path.write_text(json.dumps({"schema_version": 99, "result": {}}))

            with pytest.raises(ValueError, match="schema_version"):
                read_document(path)


class TestRecords:
    """Test that stored estimates can be rebuilt."""

    def _round_trip(self, payload, model_hash):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = write_document(Path(tmpdir) / "doc.json", payload, {}, model_hash)
            return read_document(path)

    def test_moment_report(self, report):
        document = self._round_trip(moment_report_record(report), report.model_hash)
        restored = result_from_document(document)

        assert isinstance(restored, MomentReport)
        assert restored.central_moments == report.central_moments
        assert restored.kurtosis == report.kurtosis
        assert restored.skewness.z_score == math.inf
        assert restored.method is WindingMethod.ROOT_COUNT
        assert restored.excluded == 1
        np.testing.assert_array_equal(restored.windings, report.windings)

    def test_non_finite_values_are_strings(self, report):
        record = moment_report_record(report)

        assert record["skewness"]["z_score"] == "inf"
        json.dumps(record, allow_nan=False)

    def test_correlator(self, correlator):
        document = self._round_trip(correlator_record(correlator), correlator.model_hash)
        restored = result_from_document(document)

        assert restored == correlator

    def test_prediction(self):
        prediction = Prediction(
            16,
            "h",
            {"mu2": 4.5, "corr": 1.0 - 2.0j},
            rel_tol={"mu2": 0.15},
            bounds={"corr": 0.5},
        )
        restored = prediction_from_document(self._round_trip(prediction_record(prediction), "h"))

        assert restored.values == {"mu2": 4.5, "corr": 1.0 - 2.0j}
        assert restored.rel_tol == {"mu2": 0.15}
        assert restored.bounds == {"corr": 0.5}
        assert restored.n == 16

    def test_verdict_record(self, correlator):
        verdict = compare(correlator, Prediction(8, correlator.model_hash, {"corr": -1.25 + 0.5j}))
        record = verdict_record(verdict)

        assert record["kind"] == "verdict"
        assert record["passed"] is True
        assert record["quantities"][0]["estimate"] == {"re": -1.25, "im": 0.5}
        json.dumps(record, allow_nan=False)

    def test_wrong_kind(self, correlator):
        document = {"model_hash": "h", "result": {"kind": "verdict"}}

        with pytest.raises(ValueError, match="no estimate"):
            result_from_document(document)
        with pytest.raises(ValueError, match="no prediction"):
            prediction_from_document(document)


class TestProvenanceComments:
    """Test the comment header shared by the CSV artifacts."""

    def test_lines(self):
        lines = provenance_comments({"n": 4, "method": WindingMethod.ROOT_COUNT}, "abc123")

        assert lines[0] == f"# schema_version: {SCHEMA_VERSION}"
        assert lines[1] == "# model_hash: abc123"
        assert json.loads(lines[2].removeprefix("# config: ")) == {"method": "root_count", "n": 4}

    def test_stable_key_order(self):
        first = provenance_comments({"seed": 1, "n": 4}, "h")
        second = provenance_comments({"n": 4, "seed": 1}, "h")

        assert first == second
