"""Exception hierarchy shared by every numerical routine in the package."""


class NumericalError(ArithmeticError):
    """Base class for all errors raised by hyperkernel."""


class DomainError(NumericalError, ValueError):
    """An argument lies outside the domain of the requested function."""


class PoleError(NumericalError):
    """A gamma function or hypergeometric denominator hit a pole."""


class TruncationError(NumericalError):
    """A series or quadrature failed to converge within its budget.

    ``last_term`` carries the magnitude of the last term (or the last
    error estimate) so callers can judge how far from convergence they were.
    """

    def __init__(self, message, last_term=None, estimates=None):
        super().__init__(message)
        self.last_term = last_term
        self.estimates = estimates
