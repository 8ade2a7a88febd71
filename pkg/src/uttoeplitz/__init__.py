"""Norm-bounded strictly upper triangular Toeplitz realizations of real spectra."""
from .errors import BoundViolation, InputError, UTToeplitzError
from .spectra import (
    PairedSpectrum,
    SpectrumSequence,
    greedy_rearrange,
    paired_rearrange,
    rotation_sum_max,
    validate_spectrum,
)
from .toeplitz import (
    C_PAIRED,
    K_THEOREM,
    build_B,
    build_T,
    hn_eigensystem,
    operator_norm,
    skew_norm_exact,
    t_matrix,
    toeplitz_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "BoundViolation", "InputError", "UTToeplitzError",
    "PairedSpectrum", "SpectrumSequence", "greedy_rearrange", "paired_rearrange",
    "rotation_sum_max", "validate_spectrum",
    "C_PAIRED", "K_THEOREM", "build_B", "build_T", "hn_eigensystem", "operator_norm",
    "skew_norm_exact", "t_matrix", "toeplitz_coefficients",
]
