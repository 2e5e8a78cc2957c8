"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """Raised for malformed inputs: wrong lengths, out-of-range indices, bad sizes."""


class InvalidStateError(RuntimeError):
    """Raised when an operation is applied to an object in the wrong state."""


class NumericalBreakdownError(ArithmeticError):
    """Non-finite values appeared inside an iterative method."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class NotEnoughPointsError(ValueError):
    """Too few usable samples to fit an estimate."""


class GuardError(InvalidArgumentError):
    """A problem size exceeds the limit of a dense or exhaustive routine."""
