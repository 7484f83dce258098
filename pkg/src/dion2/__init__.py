"""Dion2: orthonormalized momentum updates on a selected row or column subset.

Reference implementation of Muon, Dion2 (with its full-decay ablation) and a
low-rank Dion baseline, plus the training harness and step-time benchmark used
to compare them.
"""

from .errors import ConfigError, DegenerateInputError, Dion2Error, NumericalError, ShapeError
from .linalg import frobenius_norm, gram_schmidt, jacobi_svd, matmul, spectral_norm_estimate, transpose
from .optimizers import (
    Algorithm,
    OptimizerConfig,
    ParamState,
    Selection,
    UpdateOutcome,
    lr_schedule,
    step,
)
from .orthonorm import DEFAULT_NS, NewtonSchulzParams, newton_schulz, newton_schulz_auto, rms_to_rms_norm
from .rng import Rng
from .selection import Axis, SelectionMask, select_count, select_l1, select_random

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Axis",
    "ConfigError",
    "DEFAULT_NS",
    "DegenerateInputError",
    "Dion2Error",
    "NewtonSchulzParams",
    "NumericalError",
    "OptimizerConfig",
    "ParamState",
    "Rng",
    "Selection",
    "SelectionMask",
    "ShapeError",
    "UpdateOutcome",
    "frobenius_norm",
    "gram_schmidt",
    "jacobi_svd",
    "lr_schedule",
    "matmul",
    "newton_schulz",
    "newton_schulz_auto",
    "rms_to_rms_norm",
    "select_count",
    "select_l1",
    "select_random",
    "spectral_norm_estimate",
    "step",
    "transpose",
]
