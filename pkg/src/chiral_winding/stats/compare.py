"""Pass/fail comparison of Monte Carlo estimates against analytic predictions."""

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from chiral_winding.errors import MismatchedConfigError
from chiral_winding.stats.montecarlo import CorrelatorEstimate, MomentReport

Z_LIMIT = 3.0
VARIANCE_REL_TOL = 0.15


@dataclass(frozen=True)
class Prediction:
    """Predicted values keyed by quantity name, with optional tolerances.

    A quantity passes when |z| < 3, or when its deviation is within the
    relative or absolute tolerance registered for it. A bound, if given, must
    hold in addition.
    """

    n: int
    model_hash: str
    values: Mapping[str, complex]
    rel_tol: Mapping[str, float] = field(default_factory=dict)
    abs_tol: Mapping[str, float] = field(default_factory=dict)
    bounds: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in (*self.rel_tol, *self.abs_tol, *self.bounds):
            if name not in self.values:
                raise ValueError(f"tolerance given for unknown quantity {name!r}")
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))
        object.__setattr__(self, "rel_tol", MappingProxyType(dict(self.rel_tol)))
        object.__setattr__(self, "abs_tol", MappingProxyType(dict(self.abs_tol)))
        object.__setattr__(self, "bounds", MappingProxyType(dict(self.bounds)))


@dataclass(frozen=True)
class QuantityVerdict:
    name: str
    estimate: complex
    std_error: float
    predicted: complex
    z_score: float
    passed: bool


@dataclass(frozen=True)
class Verdict:
    """Per-quantity outcome of one comparison."""

    n: int
    model_hash: str
    quantities: tuple[QuantityVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(q.passed for q in self.quantities)

    @property
    def failures(self) -> list[str]:
        return [q.name for q in self.quantities if not q.passed]

    def summary(self) -> dict:
        """Machine-readable record of the verdict."""
        return {
            "n": self.n,
            "model_hash": self.model_hash,
            "passed": self.passed,
            "quantities": [
                {
                    "name": q.name,
                    "estimate": _plain(q.estimate),
                    "std_error": q.std_error,
                    "predicted": _plain(q.predicted),
                    "z_score": q.z_score if math.isfinite(q.z_score) else None,
                    "passed": q.passed,
                }
                for q in self.quantities
            ],
        }

    def lines(self) -> list[str]:
        """Human-readable verdict, one line per quantity."""
        out = []
        for q in self.quantities:
            status = "PASS" if q.passed else "FAIL"
            out.append(
                f"{status}  {q.name:<10} estimate {_plain(q.estimate)!s:<24} "
                f"predicted {_plain(q.predicted)!s:<24} z = {q.z_score:+.2f}"
            )
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return out


def _plain(value: complex) -> float | complex:
    value = complex(value)
    return value.real if value.imag == 0 else value


def moment_prediction(report: MomentReport, variance_rel_tol: float = VARIANCE_REL_TOL) -> Prediction:
    """Prediction built from the analytic values embedded in a report.

    The variance carries the 15% relative tolerance that absorbs the
    next-order correction.
    """
    values = {estimate.name: estimate.predicted for estimate in report.central_moments}
    values["skewness"] = report.skewness.predicted
    values["kurtosis"] = report.kurtosis.predicted
    return Prediction(report.n, report.model_hash, values, rel_tol={"mu2": variance_rel_tol})


def _z(estimate: complex, predicted: complex, std_error: float) -> float:
    difference = abs(complex(estimate) - complex(predicted))
    if difference == 0:
        return 0.0
    if std_error == 0:
        return math.inf
    sign = 1.0 if (complex(estimate) - complex(predicted)).real >= 0 else -1.0
    return sign * difference / std_error


def _judge(name: str, estimate: complex, std_error: float, prediction: Prediction) -> QuantityVerdict:
    predicted = complex(prediction.values[name])
    z = _z(estimate, predicted, std_error)
    deviation = abs(complex(estimate) - predicted)
    passed = abs(z) < Z_LIMIT
    if name in prediction.rel_tol and predicted != 0:
        passed = passed or deviation <= prediction.rel_tol[name] * abs(predicted)
    if name in prediction.abs_tol:
        passed = passed or deviation <= prediction.abs_tol[name]
    if name in prediction.bounds:
        passed = passed and deviation < prediction.bounds[name]
    return QuantityVerdict(name, complex(estimate), float(std_error), predicted, z, passed)


def compare(result: MomentReport | CorrelatorEstimate, prediction: Prediction) -> Verdict:
    """Judge every predicted quantity present in ``result``.

    Correlator estimates are reported under the name ``"corr"``.

    Raises:
        MismatchedConfigError: If n or the model hash differ.
        KeyError: If the prediction names a quantity the result lacks.
    """
    if result.n != prediction.n:
        raise MismatchedConfigError(f"n differs: estimate {result.n}, prediction {prediction.n}")
    if result.model_hash != prediction.model_hash:
        raise MismatchedConfigError(
            f"model hash differs: estimate {result.model_hash}, prediction {prediction.model_hash}"
        )

    if isinstance(result, CorrelatorEstimate):
        available = {"corr": (result.estimate, result.std_error)}
    else:
        estimates = result.central_moments + (result.skewness, result.kurtosis)
        available = {e.name: (e.value, e.std_error) for e in estimates}

    quantities = []
    for name in prediction.values:
        if name not in available:
            raise KeyError(f"result has no quantity {name!r}")
        estimate, error = available[name]
        quantities.append(_judge(name, estimate, error, prediction))
    return Verdict(result.n, result.model_hash, tuple(quantities))
