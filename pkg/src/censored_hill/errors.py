"""Exception types shared across the package."""


class CensoredHillError(Exception):
    """Base class for all package errors."""


class DomainError(CensoredHillError, ValueError):
    """An argument lies outside the domain of the operation."""


class EstimationError(CensoredHillError):
    """The data do not support the requested estimate (e.g. no uncensored extremes)."""


class NumericError(CensoredHillError, ArithmeticError):
    """A numerical routine (quadrature, root finding) failed to converge."""
