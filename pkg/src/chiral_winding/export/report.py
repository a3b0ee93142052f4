"""JSON artifacts: every document carries the schema version, the run
configuration and the model hash.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any

from chiral_winding.analytic.moments import MomentPrediction
from chiral_winding.core.winding import WindingMethod
from chiral_winding.stats.compare import Prediction, Verdict
from chiral_winding.stats.montecarlo import CorrelatorEstimate, MomentEstimate, MomentReport

SCHEMA_VERSION = 1


def _number(value: Any) -> Any:
    """JSON-safe scalar: complex as {"re", "im"}, non-finite floats as strings."""
    if isinstance(value, complex):
        if value.imag == 0:
            return _number(value.real)
        return {"re": _number(value.real), "im": _number(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _estimate_record(estimate: MomentEstimate) -> dict:
    return {
        "name": estimate.name,
        "value": _number(float(estimate.value)),
        "std_error": _number(float(estimate.std_error)),
        "predicted": _number(float(estimate.predicted)),
        "z_score": _number(float(estimate.z_score)),
    }


def moment_report_record(report: MomentReport) -> dict:
    return {
        "kind": "moment_report",
        "n": report.n,
        "samples": report.samples,
        "excluded": report.excluded,
        "master_seed": report.master_seed,
        "method": report.method.value,
        "i2": report.i2,
        "central_moments": [_estimate_record(e) for e in report.central_moments],
        "skewness": _estimate_record(report.skewness),
        "kurtosis": _estimate_record(report.kurtosis),
        "predicted": [
            {
                "order": p.order,
                "leading_value": p.leading_value,
                "error_order": p.error_order,
            }
            for p in report.predicted
        ],
        "windings": [int(w) for w in report.windings],
    }


def correlator_record(estimate: CorrelatorEstimate) -> dict:
    return {
        "kind": "correlator_estimate",
        "n": estimate.n,
        "k": estimate.k,
        "points": list(estimate.points),
        "estimate": {"re": estimate.estimate.real, "im": estimate.estimate.imag},
        "std_error": estimate.std_error,
        "samples": estimate.samples,
        "excluded": estimate.excluded,
        "master_seed": estimate.master_seed,
    }


def verdict_record(verdict: Verdict) -> dict:
    summary = verdict.summary()
    for quantity in summary["quantities"]:
        for key in ("estimate", "predicted"):
            quantity[key] = _number(quantity[key])
    return {"kind": "verdict", **summary}


def _config_echo(config: dict) -> dict:
    echo = {}
    for key, value in sorted(config.items()):
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, dict):
            value = _config_echo(value)
        echo[key] = value
    return echo


def write_document(path: Path | str, payload: dict, config: dict, model_hash: str) -> Path:
    """Write ``payload`` wrapped with schema_version, config and model_hash.

    Keys are sorted so a rerun with the same configuration is byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        "schema_version": SCHEMA_VERSION,
        "model_hash": model_hash,
        "config": _config_echo(config),
        "result": payload,
    }
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def provenance_comments(config: dict, model_hash: str) -> tuple[str, ...]:
    """Comment lines that head every CSV artifact: schema, model hash, config."""
    echo = json.dumps(_config_echo(config), sort_keys=True, separators=(",", ":"))
    return (
        f"# schema_version: {SCHEMA_VERSION}",
        f"# model_hash: {model_hash}",
        f"# config: {echo}",
    )


def read_document(path: Path | str) -> dict:
    """Load a document written by ``write_document``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If it is not JSON or has an unknown schema version.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Artifact not found: {path}")
    try:
        with open(path) as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in {path}: {e}") from e
    if not isinstance(document, dict) or document.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path} is not a schema_version {SCHEMA_VERSION} artifact")
    return document


def _complex(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(float(value["re"]), float(value["im"]))
    return complex(float(value))


def _estimate_from(record: dict) -> MomentEstimate:
    return MomentEstimate(
        name=record["name"],
        value=float(record["value"]),
        std_error=float(record["std_error"]),
        predicted=float(record["predicted"]),
        z_score=float(record["z_score"]),
    )


def result_from_document(document: dict) -> MomentReport | CorrelatorEstimate:
    """Rebuild the estimate stored in a moment-report or correlator document.

    Raises:
        ValueError: If the document holds neither.
    """
    result = document["result"]
    kind = result.get("kind")
    if kind == "moment_report":
        return MomentReport(
            n=int(result["n"]),
            samples=int(result["samples"]),
            excluded=int(result["excluded"]),
            central_moments=tuple(_estimate_from(r) for r in result["central_moments"]),
            skewness=_estimate_from(result["skewness"]),
            kurtosis=_estimate_from(result["kurtosis"]),
            predicted=tuple(
                MomentPrediction(
                    order=int(p["order"]),
                    leading_value=float(p["leading_value"]),
                    error_order=float(p["error_order"]),
                    i2=float(result["i2"]),
                )
                for p in result["predicted"]
            ),
            i2=float(result["i2"]),
            model_hash=document["model_hash"],
            master_seed=int(result["master_seed"]),
            method=WindingMethod(result["method"]),
            windings=result.get("windings", []),
        )
    if kind == "correlator_estimate":
        return CorrelatorEstimate(
            points=tuple(float(p) for p in result["points"]),
            k=int(result["k"]),
            estimate=_complex(result["estimate"]),
            std_error=float(result["std_error"]),
            samples=int(result["samples"]),
            excluded=int(result["excluded"]),
            n=int(result["n"]),
            model_hash=document["model_hash"],
            master_seed=int(result["master_seed"]),
        )
    raise ValueError(f"document holds no estimate (kind {kind!r})")


def prediction_record(prediction: Prediction) -> dict:
    return {
        "kind": "prediction",
        "n": prediction.n,
        "values": {name: _number(complex(v)) for name, v in prediction.values.items()},
        "rel_tol": dict(prediction.rel_tol),
        "abs_tol": dict(prediction.abs_tol),
        "bounds": dict(prediction.bounds),
    }


def prediction_from_document(document: dict) -> Prediction:
    """Rebuild a Prediction from a document written with ``prediction_record``.

    Raises:
        ValueError: If the document holds no prediction.
    """
    result = document["result"]
    if result.get("kind") != "prediction":
        raise ValueError(f"document holds no prediction (kind {result.get('kind')!r})")
    return Prediction(
        n=int(result["n"]),
        model_hash=document["model_hash"],
        values={name: _complex(v) for name, v in result["values"].items()},
        rel_tol=result.get("rel_tol", {}),
        abs_tol=result.get("abs_tol", {}),
        bounds=result.get("bounds", {}),
    )
