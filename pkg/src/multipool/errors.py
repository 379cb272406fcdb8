"""Exception types shared across the package."""


class MultipoolError(Exception):
    """Base class for every error this package raises on purpose."""


class DomainError(MultipoolError, ValueError):
    """An argument violates an operation's domain (range, shape, consistency)."""


class UnsupportedFieldError(MultipoolError, ValueError):
    """The requested field order is not a supported prime power."""


class DesignBoundError(MultipoolError, ValueError):
    """The requested multiplicity exceeds what designs of this size admit."""


class NotApplicableError(MultipoolError):
    """A formula was requested outside the hypotheses under which it holds."""


class InfeasibleError(MultipoolError):
    """No parameter value under the configured cap meets the target.

    Carries ``raw_bound``, the real-valued lower bound that exceeded the cap,
    so callers can report how far out of reach the target was.
    """

    def __init__(self, message: str, raw_bound: float):
        super().__init__(message)
        self.raw_bound = raw_bound


class NoSolutionError(MultipoolError, ValueError):
    """The target value lies outside the achievable range."""


class UndefinedResultError(MultipoolError, ArithmeticError):
    """The requested quantity is a conditional with zero mass to condition on."""


class MatrixFormatError(MultipoolError, ValueError):
    """A design file could not be parsed.

    ``line`` and ``column`` are 1-based when the location is known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
