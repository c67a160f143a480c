"""Exception types raised across the package."""


class ValidationError(ValueError):
    """An input violates a documented invariant (shape, hermiticity, trace, ...)."""


class InfeasibleError(ValueError):
    """Target expected values lie outside the convex support."""


class SolverError(RuntimeError):
    """The inference solver failed to converge or to certify a face."""
