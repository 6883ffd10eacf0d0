"""Exception types for data-driven failures (as opposed to caller bugs)."""


class DomainError(Exception):
    """Base class for failures caused by the numerical content of the inputs."""


class DegenerateMetricError(DomainError):
    """A section Gram matrix lost positivity (det <= 0 after symmetrization)."""

    def __init__(self, n, cond, message=None):
        self.n = n
        self.cond = cond
        super().__init__(
            message
            or f"Gram matrix numerically singular for degree n={n} "
            f"(condition estimate {cond:.3e})"
        )


class DivergenceError(DomainError):
    """An integral failed its tail-decay test and cannot be trusted."""


class WindowError(DomainError):
    """A root or level set falls outside the truncated grid window."""


class QuadratureError(DomainError):
    """A quadrature did not converge (non-finite or non-positive norm)."""


class AccuracyError(DomainError):
    """An adaptive solver could not meet the requested tolerance."""

    def __init__(self, achieved, requested, message=None):
        self.achieved = achieved
        self.requested = requested
        super().__init__(
            message
            or f"requested tolerance {requested:.3e} not met "
            f"(achieved {achieved:.3e})"
        )


class UnknownFamilyError(DomainError):
    """Requested a probe/profile family that does not exist."""
