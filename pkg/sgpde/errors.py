"""
Exception hierarchy and CLI exit codes.
"""

from typing import Optional

import numpy as np

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class SGPDEError(Exception):
    """Base class for all solver errors."""

    exit_code: int = EXIT_CONFIG


class InvalidArgumentError(SGPDEError, ValueError):
    """An argument has the wrong shape, dimension or value."""


class InvalidConfigurationError(SGPDEError, ValueError):
    """Counts, ratios or run settings cannot be satisfied."""


class UnsupportedOperatorError(SGPDEError, ValueError):
    """A differential operator exceeds the supported derivative order."""


class IngestionError(SGPDEError):
    """A reference grid file is malformed or incomplete."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class NumericalFailureError(SGPDEError):
    """A factorization or quadrature failed beyond recovery."""

    exit_code = EXIT_NUMERICAL


class DivergenceError(NumericalFailureError):
    """Gauss-Newton produced a non-finite iterate."""

    def __init__(self, message: str, last_finite: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_finite = last_finite
