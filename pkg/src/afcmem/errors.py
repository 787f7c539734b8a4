"""Exception hierarchy.

Every error raised on purpose by the package derives from ``AFCError``.
The CLI maps ``ConfigError`` to exit code 2 and ``NumericalError`` to 3.
"""


class AFCError(Exception):
    pass


class ConfigError(AFCError, ValueError):
    """Bad user input: parameters, scenario files, schedules."""


class InvalidParameterError(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class ResolutionError(ConfigError):
    pass


class SchedulingError(ConfigError):
    pass


class NormalizationError(ConfigError):
    pass


class InfeasibleError(ConfigError):
    pass


class NumericalError(AFCError, ArithmeticError):
    """The numerics went wrong (instability, non-finite output, degenerate fit)."""


class NumericalStepError(NumericalError):
    pass


class FitDegeneracyError(NumericalError):
    pass


class UndefinedFidelityError(NumericalError, ZeroDivisionError):
    pass
