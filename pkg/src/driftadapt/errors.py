"""Exception types shared across the package.

The CLI maps these onto distinct exit codes; library callers can catch
the base class.
"""


class DriftAdaptError(Exception):
    """Base class for all package errors."""


class ConfigError(DriftAdaptError):
    """Invalid configuration: bad parameter values, malformed config files."""


class DataError(DriftAdaptError):
    """Problems with input data: IO failures, ragged rows, schema mismatches."""


class FitError(DriftAdaptError):
    """A model fit could not proceed (empty data, degenerate folds, ...)."""
