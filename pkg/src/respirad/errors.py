"""Exception types shared across the package.

The CLI maps these onto exit codes (config 2, data 3, numerical 4).
"""


class ConfigError(ValueError):
    """Invalid configuration or dimension mismatch."""


class DataError(ValueError):
    """Malformed or degenerate input data (files, zero-energy signals)."""


class NumericalError(RuntimeError):
    """Inference failed numerically (e.g. nonpositive precision denominator)."""
