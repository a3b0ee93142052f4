"""Monte Carlo estimators and comparison against predictions."""
from .compare import Prediction, Verdict, compare, moment_prediction
from .montecarlo import (
    CorrelatorEstimate,
    MomentEstimate,
    MomentReport,
    mc_corr,
    mc_gen_func,
    mc_winding_moments,
)

__all__ = [
    "MomentEstimate",
    "MomentReport",
    "CorrelatorEstimate",
    "mc_winding_moments",
    "mc_corr",
    "mc_gen_func",
    "Prediction",
    "Verdict",
    "compare",
    "moment_prediction",
]
