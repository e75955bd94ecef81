"""Exception hierarchy shared by all coqec modules."""


class QECError(Exception):
    """Base class for every error raised by coqec."""


class DimensionMismatch(QECError, ValueError):
    pass


class CompletenessViolation(QECError, ValueError):
    pass


class InvalidProbability(QECError, ValueError):
    pass


class InvalidWeight(QECError, ValueError):
    pass


class MixedDimensions(QECError, ValueError):
    pass


class OutOfRange(QECError, ValueError):
    pass


class ZeroDelta(QECError, ArithmeticError):
    """The unconstrained coefficient matrix vanished, so it cannot be normalized."""


class RankOverflow(QECError, ValueError):
    """Gamma has more significant eigenvalues than the recovery has rows."""


class MaxIterationsExceeded(QECError, RuntimeError):
    pass


class RankDeficientWarning(UserWarning):
    """The least-squares encoding is rank deficient; its polar factor is not unique."""
