"""Exception hierarchy shared by all dmdkit modules.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies and name the offending quantity in
the message.
"""

__all__ = [
    "DmdkitError",
    "DataError",
    "ShapeError",
    "ConditioningError",
    "BackendError",
]


class DmdkitError(Exception):
    """Base class for all errors raised by dmdkit."""


class DataError(DmdkitError):
    """Malformed input data: non-finite entries, bad files, invalid weights."""


class ShapeError(DataError):
    """Dimension bookkeeping violation between matrices that must conform."""


class ConditioningError(DmdkitError):
    """Numerical rank or invertibility assumption does not hold.

    Carries the singular values that triggered the failure so callers can
    report how far the data is from satisfying the precondition.
    """

    def __init__(self, message, *, sigma_min=None, sigma_max=None):
        super().__init__(message)
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max


class BackendError(DmdkitError):
    """An underlying dense factorization failed to converge."""
