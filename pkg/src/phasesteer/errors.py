"""Exception hierarchy shared by every module of the package."""


class PhaseSteerError(Exception):
    """Base class for all package errors."""


class DomainError(PhaseSteerError, ValueError):
    """An input lies outside the domain where the quantity is defined."""


class DegenerateError(PhaseSteerError):
    """A normalisation or weight vanished (zero-probability outcome, empty record)."""


class SingularityError(PhaseSteerError):
    """An analytic formula hit one of its poles."""


class SingularMatrixError(PhaseSteerError):
    """An information matrix is not safely invertible."""


class ConvergenceError(PhaseSteerError):
    """A numerical routine (quadrature refinement, root finder) did not converge."""
