"""Exception hierarchy shared by every module."""


class OscBathError(Exception):
    """Base class for all library errors."""


class DomainError(OscBathError, ValueError):
    """An argument lies outside the domain of the function."""


class StrongCouplingError(OscBathError, ValueError):
    """kappa^2 = omega_bar^2 - pi^2 g^2 / 4 is not positive."""


class AmbiguousBranchError(OscBathError, ValueError):
    """A real argument was given to a two-sheeted function without a side."""


class PoleError(OscBathError, ValueError):
    """Evaluation requested on (or numerically at) a pole."""


class StabilityError(OscBathError):
    """A normal mode with Omega^2 <= 0 (runaway mode) was detected."""


class BracketError(OscBathError):
    """An expected sign change of a secular function is missing."""


class QuadratureError(OscBathError):
    """An integral failed to reach the requested tolerance."""

    def __init__(self, message, *, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class PoleOrderError(QuadratureError):
    """The principal-value pole is not simple."""
