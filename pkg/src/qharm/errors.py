"""
Exception hierarchy for qharm.

Every error subclasses both ``QHarmError`` and the builtin it refines, so
callers can catch ``ValueError`` the way they would for any bad argument, or
``QHarmError`` to catch everything raised by this package.
"""


class QHarmError(Exception):
    """Base class for all qharm errors."""


class ConfigError(QHarmError, ValueError):
    """Run configuration could not be read or is invalid."""


class DomainError(QHarmError, ValueError):
    """Invalid domain geometry."""


class PointOutsideDomainError(DomainError):
    """A point lies outside the closed domain (with the backend tolerance)."""

    def __init__(self, point, domain):
        self.point = tuple(point)
        self.domain = domain
        super().__init__(f"Point {self.point} lies outside {domain.describe()}.")


class BackendMismatchError(QHarmError, ValueError):
    """Two fields do not share a backend or a domain."""


class DegreeCapError(QHarmError, ValueError):
    """A polynomial exceeds the configured degree cap."""


class PreconditionError(QHarmError, ValueError):
    """An operation precondition does not hold.

    Attributes:
        argument: name of the offending argument, if any.
    """

    def __init__(self, message: str, argument: str | None = None):
        self.argument = argument
        super().__init__(message)


class AxisError(QHarmError, ValueError):
    """Invalid or mismatched axis descriptor."""


class InconsistentFunctionalError(QHarmError, ValueError):
    """Functional readings are not generated by a single evaluation point."""

    def __init__(self, inconsistency: float, tol: float, point=None):
        self.inconsistency = inconsistency
        self.tol = tol
        self.point = point
        super().__init__(
            f"Readings inconsistent by {inconsistency:.3e} (tol {tol:.1e}); "
            "functional is not a point of the spectrum."
        )
