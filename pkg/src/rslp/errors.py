"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, and estimation/inference failures with 4.
"""


class RslpError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RslpError):
    """Invalid configuration (bad option combination, infeasible settings)."""


class DataError(RslpError):
    """Problem with input data (panel construction, preprocessing)."""


class ParseError(DataError):
    """Malformed input file; message carries the row/column location."""


class TransformError(DataError):
    """A stationarity transform could not be applied to a column."""


class EstimationError(RslpError):
    """Estimation failed (infeasible horizon, degenerate ensemble)."""


class InferenceError(EstimationError):
    """Bootstrap inference failed (too many degenerate replicates)."""
