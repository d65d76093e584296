"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes (see ``laid.cli``).
"""


class LaidError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(LaidError, ValueError):
    pass


class ParameterError(LaidError, ValueError):
    pass


class NumericError(LaidError, ArithmeticError):
    pass


class StateError(LaidError, RuntimeError):
    pass


class DataError(LaidError):
    pass


class ConfigError(LaidError):
    pass


class FitError(LaidError, ValueError):
    pass


class UndefinedMetricError(LaidError, ValueError):
    pass


class UnsupportedMetricError(LaidError, ValueError):
    pass
