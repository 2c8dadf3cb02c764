"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class FeatselError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(FeatselError):
    """Bad command line, config file, or parameter combination."""


class DataError(FeatselError):
    """Malformed or degenerate input data (CSV problems, invariant breaks)."""


class NumericalError(FeatselError):
    """A numerical procedure failed (non-convergence, undefined statistic)."""


class ConvergenceError(NumericalError):
    """Iterative solver hit its sweep cap; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class UndefinedCorrelationError(NumericalError):
    """Correlation undefined because one side has zero variance.

    ``side`` is ``"x"`` or ``"y"``, naming the offending argument.
    """

    def __init__(self, side):
        super().__init__(f"correlation undefined: zero variance in {side}")
        self.side = side
