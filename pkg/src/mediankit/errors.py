"""Exception types shared across the package."""


class MedianKitError(Exception):
    """Base class for all errors raised by mediankit."""


class InstanceTooLarge(MedianKitError):
    """An exact search would exceed its configured size cap."""


class NotMedian(MedianKitError):
    """A graph failed the unique-median condition."""


class ClosureBudgetExceeded(MedianKitError):
    """A median closure grew beyond its point budget."""


class WindowBudgetExceeded(MedianKitError):
    """A window would contain more points than allowed."""


class KindMismatch(MedianKitError):
    """An automorphism sends a factor to a factor of a different kind."""


class UndecidedAtBound(MedianKitError):
    """Neither exact structure nor bounded search settled a question."""

    def __init__(self, message: str, bound: int | None = None):
        super().__init__(message)
        self.bound = bound


class InversionPresent(MedianKitError):
    """The action inverts a wall, so a construction needing no inversions fails."""

    def __init__(self, message: str, wall=None, word: str | None = None):
        super().__init__(message)
        self.wall = wall
        self.word = word


class PreconditionFailed(MedianKitError):
    """An input violates an operation's precondition; carries a witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class ParseError(MedianKitError):
    """An instance file is not valid JSON."""


class SchemaError(MedianKitError):
    """An instance file is valid JSON but does not match the schema."""


class UnknownRequest(MedianKitError):
    """A request names an unknown operation."""


class OracleBudgetExceeded(MedianKitError):
    """A brute-force oracle would exceed its work budget."""
