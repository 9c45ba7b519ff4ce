"""Exception types shared across the package."""


class NZError(Exception):
    """Base class for all errors raised by nzpatterns."""


class BudgetExceeded(NZError):
    """A search ran past its configured work budget.

    ``detail`` holds whatever the search could report about where it stopped
    (nodes expanded, DP level, live configurations, ...).
    """

    def __init__(self, message, **detail):
        super().__init__(message)
        self.detail = detail


class InputError(NZError, ValueError):
    """Malformed input: bad file contents, unknown names, invalid objects."""


class InvalidPath(InputError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class InfeasibleError(NZError):
    """A request exceeds a feasibility guard (override the guard to force it)."""


class AlphabetTooSmall(NZError):
    def __init__(self, required, available, g):
        super().__init__(
            f"alphabet A_{g} has {available} members, need more than {required}"
        )
        self.required = required
        self.available = available
        self.g = g


class BlockCollision(NZError):
    pass


class NotInDomain(NZError):
    """The matrix handed to the involution is not in D_n."""


class NoUnblockedBlock(NZError):
    """Every B/B' block is blocked: the matrix is a fixed point."""


class SingularStep(NZError, ArithmeticError):
    def __init__(self, n):
        super().__init__(f"leading coefficient vanishes at n = {n}")
        self.n = n


class NonIntegral(NZError, ArithmeticError):
    def __init__(self, n, numerator, denominator):
        super().__init__(
            f"term {n} is not an integer: {numerator} / {denominator}"
        )
        self.n = n


class InvariantError(NZError, AssertionError):
    """An internal consistency check failed."""
