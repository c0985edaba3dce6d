"""Exception hierarchy shared by all radiant modules."""


class RadiantError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RadiantError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class RegimeError(DomainError):
    """The parameters belong to the other physical regime (shell vs Dicke)."""


class PoleError(DomainError):
    """Evaluation requested exactly on the unregularized pole k = k0."""


class NumericalError(RadiantError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy contract."""

    def __init__(self, message, *, iterations=None, residual=None, estimate=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.estimate = estimate
