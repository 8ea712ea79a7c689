"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class ShapcloudError(Exception):
    """Base class for all package errors."""


class ConfigError(ShapcloudError):
    """Invalid configuration value or unusable parameter combination."""


class DataError(ShapcloudError):
    """Malformed, inconsistent, or insufficient input data."""


class NumericError(ShapcloudError):
    """Numerical failure: non-convergence, degenerate statistics, empty sampler pool."""
