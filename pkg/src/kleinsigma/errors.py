"""Exception hierarchy.  Every error raised on purpose derives from KleinError."""


class KleinError(Exception):
    """Base class; ``stage`` is filled in by the pipeline runner."""

    stage: str | None = None


class InfiniteComplement(KleinError, ValueError):
    pass


class UnboundVariable(KleinError, KeyError):
    pass


class InvalidModuli(KleinError, ValueError):
    pass


class NotOnCurve(KleinError, ValueError):
    pass


class PoleAtDiagonal(KleinError, ZeroDivisionError):
    pass


class ConditioningError(KleinError, ArithmeticError):
    pass


class PrecisionError(KleinError, ArithmeticError):
    pass


class PathError(KleinError, ValueError):
    pass


class RiemannConstantNotFound(KleinError, LookupError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class TruncationError(KleinError, ArithmeticError):
    pass


class OnThetaDivisor(KleinError, ZeroDivisionError):
    pass


class DegenerateConfig(KleinError, ValueError):
    pass


class SingularConfiguration(KleinError, ArithmeticError):
    pass


class RootFindingError(KleinError, ArithmeticError):
    pass


class DeeperStratum(KleinError, ArithmeticError):
    pass
