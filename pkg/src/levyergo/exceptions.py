"""Exception hierarchy shared by the package and mapped to CLI exit codes."""


class LevyErgoError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParameterError(LevyErgoError, ValueError):
    """A numeric parameter is outside its admissible range."""

    exit_code = 2


class UsageError(LevyErgoError, ValueError):
    """Malformed input: wrong shapes, empty samples, bad config fields."""

    exit_code = 2


class StructuralError(LevyErgoError, ValueError):
    """The model cannot be built at all (e.g. nonpositive eigenvalues)."""

    exit_code = 2


class ConvergenceError(LevyErgoError, RuntimeError):
    """An iterative solver ran out of iterations."""

    exit_code = 4

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InsufficientDataError(LevyErgoError, ValueError):
    """Too few usable points for a statistical fit."""

    exit_code = 5
