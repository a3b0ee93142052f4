"""Large-N asymptotics: parallelism curves, correlators and moment predictions."""
from .correlators import (
    cauchy_identity_check,
    corr_1,
    corr_2,
    corr_3,
    corr_from_gen_func,
    corr_k,
    gen_func,
    unfolded_corr,
)
from .curves import Curve, CurveSet, find_parallel_curves
from .moments import (
    MomentPrediction,
    gaussian_pdf,
    i2,
    i2_from_unfolded,
    i3,
    predict_mean,
    predict_moments,
    predict_shape,
)

__all__ = [
    "Curve",
    "CurveSet",
    "find_parallel_curves",
    "gen_func",
    "corr_k",
    "corr_1",
    "corr_2",
    "corr_3",
    "corr_from_gen_func",
    "cauchy_identity_check",
    "unfolded_corr",
    "MomentPrediction",
    "predict_moments",
    "predict_mean",
    "predict_shape",
    "gaussian_pdf",
    "i2",
    "i2_from_unfolded",
    "i3",
]
