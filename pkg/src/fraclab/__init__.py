"""Caputo fractional ODEs, fractional SDEs and fractional gradient flows.

The discrete Caputo derivative used throughout is the convolution inverse of
the piecewise-constant quadrature of the Riemann-Liouville integral.
"""

from .errors import FraclabError, NumericalFailure, UsageError
from .fracops import CoefficientTable, Grid, Path, caputo_coefficients, integral_weights
from .mlf import mittag_leffler
from .rng import RngSeed

__all__ = [
    "CoefficientTable",
    "FraclabError",
    "Grid",
    "NumericalFailure",
    "Path",
    "RngSeed",
    "UsageError",
    "caputo_coefficients",
    "integral_weights",
    "mittag_leffler",
]

__version__ = "0.1.0"
