"""Exception types raised across the package."""


class ArsonProofError(Exception):
    """Base class for all package errors."""


class ValidationError(ArsonProofError, ValueError):
    """A parameter set violates a documented invariant."""


class DomainError(ArsonProofError, ValueError):
    """An argument lies outside the domain of the operation."""


class IntegrationError(ArsonProofError, ArithmeticError):
    """A quadrature integrand produced a non-finite value."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x
