"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A construction or operation was called with out-of-contract arguments."""


class CapacityError(RuntimeError):
    """Requested parameters exceed the supported exact-arithmetic scale."""


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed the configured operation budget."""


class UnsupportedArithmeticError(ValueError):
    """Rank computation requested over a ring where it is not defined here."""


class CertificationError(RuntimeError):
    """A bound was requested on a point set whose required property is not established."""
