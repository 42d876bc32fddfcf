"""Exception taxonomy shared by the library, service, and CLI.

The three categories map one-to-one onto CLI exit codes and HTTP status
codes, so a failure surfaces the same way regardless of entry point.
"""


class EsnplastError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"
    exit_code = 1


class ConfigError(EsnplastError, ValueError):
    """Invalid configuration or API misuse (bad dimensions, bad ranges)."""

    category = "config"
    exit_code = 1


class DataError(EsnplastError):
    """Unreadable, malformed, or inconsistent input data."""

    category = "data"
    exit_code = 2


class NumericalError(EsnplastError):
    """Numerical failure: singular systems, divergence, non-finite values."""

    category = "numerical"
    exit_code = 3
