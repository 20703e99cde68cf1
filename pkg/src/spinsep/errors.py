"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class SpinSepError(Exception):
    """Base class for all package errors."""


class DomainError(SpinSepError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NonHermitianError(SpinSepError, ValueError):
    """A polynomial Hamiltonian is not Hermitian."""


class IntegrationError(SpinSepError, RuntimeError):
    """Time integration failed before reaching the requested end time."""

    def __init__(self, message: str, time_reached: float):
        super().__init__(f"{message} (reached t={time_reached!r})")
        self.time_reached = time_reached


class UndefinedSqueezingError(SpinSepError, ValueError):
    """The mean spin vanishes so the Wineland parameter has no meaning."""


class UnboundedVarianceError(SpinSepError, ValueError):
    """Zero Fisher information gives an unbounded Cramer-Rao variance."""


class PeakNotFoundError(SpinSepError, LookupError):
    """A series has no interior extremum of the requested kind."""


class NoSaddleError(SpinSepError, LookupError):
    """The classical flow has no hyperbolic fixed point."""


class DegenerateSaddleError(SpinSepError, ValueError):
    """The linearisation at the saddle vanishes identically."""


class SingularEndpointError(SpinSepError, ValueError):
    """A quadrature endpoint sits on a non-integrable singularity."""


class FiniteTimeBlowupError(SpinSepError, ArithmeticError):
    """A closed-form branch solution diverges before the requested time."""

    def __init__(self, message: str, blowup_time: float):
        super().__init__(f"{message} (blow-up at chi*t={blowup_time!r})")
        self.blowup_time = blowup_time
