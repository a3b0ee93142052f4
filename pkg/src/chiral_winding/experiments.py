"""End-to-end experiment orchestration.

Each ``run_*`` function takes a final configuration (see ``config.get_final_config``),
writes its artifacts into ``config["out"]`` and returns a summary object the
CLI prints.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from chiral_winding.analytic.correlators import corr_k, gen_func
from chiral_winding.analytic.curves import (
    CurveSet,
    find_parallel_curves,
    write_curves_csv,
)
from chiral_winding.analytic.moments import (
    i2,
    i2_from_unfolded,
    i3,
    predict_mean,
    predict_moments,
    predict_shape,
)
from chiral_winding.core.coeff_model import CoefficientField
from chiral_winding.core.winding import WindingMethod
from chiral_winding.export.histogram import winding_histogram, write_histogram_csv
from chiral_winding.export.report import (
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
from chiral_winding.model_file import load_model
from chiral_winding.stats.compare import Prediction, Verdict, compare, moment_prediction
from chiral_winding.stats.montecarlo import mc_corr, mc_gen_func, mc_winding_moments

logger = logging.getLogger(__name__)

RESIDUAL_LIMIT = 1e-6
SKEWNESS_BOUND = 0.15
KURTOSIS_BOUND = 0.3
VARIANCE_REL_TOL = 0.15

# a(p) = a0 + a1 e^{ip}, b(p) = b0 + b1 e^{ip}; the default Gaussian-limit model
FIRST_HARMONIC = (0.92 + 0.82j, 0.91 - 0.77j, 0.41 - 0.95j, -0.84 - 0.70j)


@dataclass(frozen=True)
class ValidationSummary:
    model_hash: str
    berry_phase: complex
    norm_residual: float
    tangent_residual: float
    curve_count: int
    diagonal_only: bool

    def lines(self) -> list[str]:
        b = self.berry_phase
        return [
            f"model hash:        {self.model_hash}",
            f"Berry phase:       {b.real:.12f}{b.imag:+.12f}i",
            f"norm residual:     {self.norm_residual:.3e}",
            f"tangent residual:  {self.tangent_residual:.3e}",
            f"parallel curves:   {self.curve_count}" + (" (diagonal only)" if self.diagonal_only else ""),
        ]


@dataclass(frozen=True)
class RunSummary:
    """Artifacts written by one command plus printable lines."""

    artifacts: tuple[Path, ...]
    lines: tuple[str, ...]
    passed: bool = True
    extra: dict[str, Any] = field(default_factory=dict)


def resolve_model(config: dict[str, Any], default_first_harmonic: bool = False) -> CoefficientField:
    """Field named by ``config["model"]``.

    Raises:
        ValueError: If no model is configured and there is no default.
        FileNotFoundError: If the model file is missing.
        ModelError: If the model file is invalid.
    """
    path = config.get("model")
    if path is None:
        if default_first_harmonic:
            return CoefficientField.first_harmonic(*FIRST_HARMONIC)
        raise ValueError("a model file is required (--model PATH)")
    return load_model(path)


def _out(config: dict[str, Any]) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _curves(canonical: CoefficientField, config: dict[str, Any]) -> CurveSet:
    return find_parallel_curves(canonical, scan_grid=config.get("scan_grid", 256))


def run_validate(config: dict[str, Any]) -> ValidationSummary:
    """Parse, canonicalize and trace the model.

    Raises:
        ModelError: If the model is degenerate or the gauge fails.
        MulticriticalPointError: If parallelism curves cross.
    """
    model = resolve_model(config)
    canonical = model.canonicalize()
    norm_residual, tangent_residual = canonical.condition_residuals()
    if max(norm_residual, tangent_residual) > RESIDUAL_LIMIT:
        raise ValueError(
            f"canonical conditions violated: residuals {norm_residual:.2e}, {tangent_residual:.2e}"
        )
    curves = _curves(canonical, config)
    return ValidationSummary(
        model_hash=model.model_hash,
        berry_phase=canonical.berry_phase,
        norm_residual=norm_residual,
        tangent_residual=tangent_residual,
        curve_count=len(curves),
        diagonal_only=len(curves) == 1,
    )


def run_curves(config: dict[str, Any]) -> RunSummary:
    model = resolve_model(config)
    canonical = model.canonicalize()
    curves = _curves(canonical, config)
    path = _out(config) / "curves.csv"
    write_curves_csv(curves, path, comments=provenance_comments(config, model.model_hash))
    lines = [f"{len(curves)} parallelism curve(s) written to {path}"]
    for index, curve in enumerate(curves):
        lines.append(f"  curve {index}: start {curve.start.tolist()}, length {curve.length:.6f}")
    return RunSummary(artifacts=(path,), lines=tuple(lines))


def _points(config: dict[str, Any]) -> list[float]:
    points = config.get("points")
    if not points:
        raise ValueError("this quantity needs --points")
    return points


def run_analytic(config: dict[str, Any]) -> RunSummary:
    """Evaluate one analytic quantity and write it as a prediction document."""
    model = resolve_model(config)
    canonical = model.canonicalize()
    n = config["n"]
    quantity = config.get("quantity", "i2")

    if quantity in ("i2", "i2_unfolded", "i3", "moments"):
        curves = _curves(canonical, config)

    if quantity == "i2":
        value: complex = i2(canonical, curves)
        values = {"i2": value}
    elif quantity == "i2_unfolded":
        value = i2_from_unfolded(canonical, curves)
        values = {"i2": value}
    elif quantity == "i3":
        value = i3(canonical, curves)
        values = {"i3": value}
    elif quantity == "moments":
        coefficient = i2(canonical, curves)
        values = {f"mu{p.order}": p.leading_value for p in (predict_moments(n, k, coefficient) for k in range(1, 7))}
        values["mu1"] = predict_mean(model, n)
        shape = predict_shape(n, coefficient)
        values["skewness"] = shape.skewness
        values["kurtosis"] = shape.kurtosis
        value = coefficient
    elif quantity == "corr":
        value = corr_k(canonical, n, _points(config))
        values = {"corr": value}
    else:
        points = _points(config)
        shifts = config.get("shifts")
        if not shifts or len(shifts) != len(points):
            raise ValueError("gen_func needs --shifts with one entry per point")
        value = gen_func(canonical, n, points, shifts)
        values = {"corr": value}

    prediction = Prediction(
        n=n,
        model_hash=model.model_hash,
        values=values,
        rel_tol={"mu2": VARIANCE_REL_TOL} if "mu2" in values else {},
    )
    path = _out(config) / f"analytic_{quantity}.json"
    write_document(path, prediction_record(prediction), config, model.model_hash)
    lines = [f"{name} = {_format(v)}" for name, v in values.items()]
    return RunSummary(artifacts=(path,), lines=tuple(lines), extra={"value": value})


def _format(value: complex | float) -> str:
    value = complex(value)
    if value.imag == 0:
        return f"{value.real:.10g}"
    return f"{value.real:.10g}{value.imag:+.10g}i"


def run_mc(config: dict[str, Any]) -> RunSummary:
    """Monte Carlo moments of W, or a sampled correlator / generating function."""
    model = resolve_model(config)
    quantity = config.get("quantity", "moments")
    n, samples, seed, workers = config["n"], config["samples"], config["seed"], config["workers"]
    out = _out(config)

    if quantity == "corr":
        estimate = mc_corr(model.canonicalize(), n, _points(config), samples, seed, workers)
        path = out / "mc_corr.json"
        write_document(path, correlator_record(estimate), config, model.model_hash)
        lines = [f"corr = {_format(estimate.estimate)} +/- {estimate.std_error:.3g} ({estimate.excluded} excluded)"]
        return RunSummary(artifacts=(path,), lines=tuple(lines))

    if quantity == "gen_func":
        shifts = config.get("shifts")
        points = _points(config)
        if not shifts or len(shifts) != len(points):
            raise ValueError("gen_func needs --shifts with one entry per point")
        estimate = mc_gen_func(model.canonicalize(), n, points, shifts, samples, seed, workers)
        path = out / "mc_gen_func.json"
        write_document(path, correlator_record(estimate), config, model.model_hash)
        lines = [f"Z = {_format(estimate.estimate)} +/- {estimate.std_error:.3g}"]
        return RunSummary(artifacts=(path,), lines=tuple(lines))

    if quantity != "moments":
        raise ValueError(f"mc supports quantities moments, corr, gen_func; got '{quantity}'")

    report = mc_winding_moments(
        model,
        n,
        samples,
        seed,
        workers=workers,
        method=WindingMethod.from_name(config.get("method", "unwrap")),
        resamples=config.get("resamples", 1000),
    )
    path = out / "mc_moments.json"
    write_document(path, moment_report_record(report), config, model.model_hash)
    lines = [
        f"{e.name:<9} {e.value:+.6g} +/- {e.std_error:.3g}  (predicted {e.predicted:+.6g}, z = {e.z_score:+.2f})"
        for e in report.central_moments + (report.skewness, report.kurtosis)
    ]
    lines.append(f"{report.excluded} of {report.samples} realizations excluded")
    return RunSummary(artifacts=(path,), lines=tuple(lines))


def run_compare(config: dict[str, Any]) -> RunSummary:
    """Judge an estimate document against a prediction document.

    Without a prediction document the analytic values embedded in a moment
    report are used.
    """
    if not config.get("estimate"):
        raise ValueError("compare needs --estimate PATH")
    estimate_doc = read_document(config["estimate"])
    result = result_from_document(estimate_doc)

    if config.get("prediction"):
        prediction = prediction_from_document(read_document(config["prediction"]))
        if "corr" not in prediction.values and hasattr(result, "central_moments"):
            available = {e.name for e in result.central_moments} | {"skewness", "kurtosis"}
            prediction = Prediction(
                n=prediction.n,
                model_hash=prediction.model_hash,
                values={k: v for k, v in prediction.values.items() if k in available},
                rel_tol={k: v for k, v in prediction.rel_tol.items() if k in available},
                abs_tol={k: v for k, v in prediction.abs_tol.items() if k in available},
                bounds={k: v for k, v in prediction.bounds.items() if k in available},
            )
    elif hasattr(result, "central_moments"):
        prediction = moment_prediction(result)
    else:
        raise ValueError("correlator estimates need --prediction PATH")

    verdict = compare(result, prediction)
    return _write_verdict(verdict, config, "verdict")


def _write_verdict(verdict: Verdict, config: dict[str, Any], stem: str) -> RunSummary:
    out = _out(config)
    json_path = write_document(out / f"{stem}.json", verdict_record(verdict), config, verdict.model_hash)
    text_path = out / f"{stem}.txt"
    lines = verdict.lines()
    text_path.write_text("\n".join(lines) + "\n")
    return RunSummary(artifacts=(json_path, text_path), lines=tuple(lines), passed=verdict.passed)


def run_gaussian_limit(config: dict[str, Any]) -> RunSummary:
    """Winding-number histogram against the Gaussian limit.

    Writes the histogram CSV with the Gaussian overlay, the moment report and a
    verdict on mean, variance, skewness and kurtosis.

    Raises:
        TooManyExclusionsError: If more than 1% of the realizations fail.
    """
    model = resolve_model(config, default_first_harmonic=True)
    n, samples, seed = config["n"], config["samples"], config["seed"]
    logger.info("Gaussian-limit run: n=%d, %d samples, seed %d", n, samples, seed)

    report = mc_winding_moments(
        model,
        n,
        samples,
        seed,
        workers=config["workers"],
        method=WindingMethod.from_name(config.get("method", "unwrap")),
        resamples=config.get("resamples", 1000),
    )
    out = _out(config)

    histogram = winding_histogram(report.windings, report.moment(1).value, n, report.i2)
    histogram_path = write_histogram_csv(
        histogram, out / "winding_histogram.csv", comments=provenance_comments(config, report.model_hash)
    )
    report_path = write_document(out / "moment_report.json", moment_report_record(report), config, report.model_hash)

    prediction = Prediction(
        n=report.n,
        model_hash=report.model_hash,
        values={
            "mu1": report.moment(1).predicted,
            "mu2": math.sqrt(n) * report.i2,
            "skewness": 0.0,
            "kurtosis": 3.0,
        },
        rel_tol={"mu2": VARIANCE_REL_TOL},
        bounds={"skewness": SKEWNESS_BOUND, "kurtosis": KURTOSIS_BOUND},
    )
    verdict_summary = _write_verdict(compare(report, prediction), config, "verdict")
    return RunSummary(
        artifacts=(histogram_path, report_path) + verdict_summary.artifacts,
        lines=verdict_summary.lines,
        passed=verdict_summary.passed,
    )
