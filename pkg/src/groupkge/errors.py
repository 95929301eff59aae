"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (bad key, bad value, mismatch)."""


class DataError(ValueError):
    """Malformed or missing input data (files, names, ids)."""


class NumericalError(RuntimeError):
    """Numerical failure: non-finite values, diverged training, axiom violation."""


class InvalidParameterError(ValueError):
    """Group parameters outside the valid domain (non-finite, non-invertible)."""
