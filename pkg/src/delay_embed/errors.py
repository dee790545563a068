"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: wrong shapes, out-of-range parameters, missing metadata."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or hit a singular system."""
