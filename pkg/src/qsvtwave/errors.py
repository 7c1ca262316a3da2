"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` used by the command-line front end:
2 for configuration problems, 3 for numerical failures and 4 for exceeded
resource caps.
"""


class QsvtWaveError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(QsvtWaveError):
    exit_code = 2


class SingularMatrix(QsvtWaveError):
    pass


class NoConvergence(QsvtWaveError):
    """Iterative routine stopped before meeting its tolerance.

    ``best`` holds the best result found so far (or ``None``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DomainError(QsvtWaveError, ValueError):
    pass


class NonRealCoefficient(QsvtWaveError):
    pass


class BudgetExceeded(QsvtWaveError):
    exit_code = 4


class CapExceeded(QsvtWaveError):
    exit_code = 4


class ZeroProbability(QsvtWaveError):
    pass


class ZeroMatrix(QsvtWaveError, ValueError):
    pass


class NormTooLarge(QsvtWaveError, ValueError):
    pass


class AngleDomain(QsvtWaveError, ValueError):
    pass


class BlockMismatch(QsvtWaveError):
    pass


class LayoutMismatch(QsvtWaveError, ValueError):
    pass


class WindowOutOfRange(QsvtWaveError, ValueError):
    exit_code = 2
