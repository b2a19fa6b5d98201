"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage/config problems exit 1, bad or
inconsistent data files exit 2, numerical failures exit 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, out-of-range values, bad flags."""


class DataError(RuntimeError):
    """Corrupt, mismatched, or inconsistent data artifacts."""


class NumericError(RuntimeError):
    """Non-finite values encountered during optimization or training."""
