"""Coefficient fields, the Ginibre two-matrix ensemble and winding extraction."""
from .coeff_model import CoefficientField, GaugeTable, ParallelPoint, beta
from .ensemble import Realization, derive_seed, dump_realization, load_realization, sample
from .winding import (
    WindingMethod,
    WindingResult,
    compute_winding,
    winding_root_count,
    winding_spherical,
    winding_unwrap,
)

__all__ = [
    "CoefficientField",
    "GaugeTable",
    "ParallelPoint",
    "beta",
    "Realization",
    "derive_seed",
    "sample",
    "dump_realization",
    "load_realization",
    "WindingMethod",
    "WindingResult",
    "compute_winding",
    "winding_unwrap",
    "winding_root_count",
    "winding_spherical",
]
