"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input (dimension mismatch, negative radius, ...)."""


class PreconditionError(RuntimeError):
    """A hypothesis that must hold before a bound can be evaluated was violated."""


class UnsupportedError(RuntimeError):
    """The requested computation is outside what the implementation can do exactly."""


class InfeasibleApproximationError(RuntimeError):
    """The truncated search space of an approximating problem is empty."""
