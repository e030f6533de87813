"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when parameters violate a documented invariant."""


class StudyAborted(RuntimeError):
    """Raised when too many Monte Carlo paths had to be excluded."""
