"""Exception hierarchy shared across the toolkit."""


class EnvsensError(Exception):
    """Base class for all package errors."""


class SchemaError(EnvsensError):
    """A file is missing required columns or keys."""


class FormatError(EnvsensError):
    """A file is structurally malformed (e.g. non-uniform time step)."""


class ValidationError(EnvsensError):
    """A value violates a domain invariant."""


class InsufficientDataError(EnvsensError):
    """Not enough data to perform the requested operation."""


class ConstructionError(EnvsensError):
    """A thermal network cannot be assembled from the building spec."""


class CoverageError(EnvsensError):
    """Weather data does not cover the requested simulation window."""


class NumericalError(EnvsensError):
    """A numerical routine produced non-finite or inadmissible values."""


class StateError(EnvsensError):
    """An operation was applied to an object in the wrong state."""


class FitFailureError(EnvsensError):
    """Every optimisation restart failed.

    Carries per-restart diagnostics in ``restarts`` (list of dicts).
    """

    def __init__(self, message, restarts=None):
        super().__init__(message)
        self.restarts = restarts or []


class NonConvergedError(EnvsensError):
    """A downstream quantity was requested from a non-converged fit."""


class UndefinedAcfError(EnvsensError):
    """Autocorrelation is undefined (zero-variance residuals)."""


class UndefinedIndexError(EnvsensError):
    """A sensitivity index is undefined (zero output variance)."""


class NotAssessableError(EnvsensError):
    """Convergence criteria need at least two estimates."""


class ConfigError(EnvsensError):
    """An experiment configuration file is invalid."""


class StageError(EnvsensError):
    """A pipeline stage failed or its prerequisites are missing."""
