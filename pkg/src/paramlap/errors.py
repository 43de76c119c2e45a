"""Exception types shared across the package.

The CLI maps each class to a process exit code.
"""


class ParamLapError(Exception):
    exit_code = 1


class UsageError(ParamLapError, ValueError):
    """Caller violated an API precondition."""

    exit_code = 1


class ParameterError(UsageError):
    """Laplacian parameters outside their admissible domain."""


class DataError(ParamLapError, ValueError):
    """Malformed or unsuitable input data (bad file, disconnected graph, ...)."""

    exit_code = 2


class NumericalError(ParamLapError, ArithmeticError):
    """Solver did not converge or produced non-finite values."""

    exit_code = 3
