"""Exception hierarchy."""


class BayesCfarError(Exception):
    """Base class for all package errors."""


class ParameterError(BayesCfarError, ValueError):
    """An argument is outside its documented range."""


class DomainError(BayesCfarError, ValueError):
    """Input data lies outside the model's support (e.g. a zero CRP cell)."""


class NumericalError(BayesCfarError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """An iterative or adaptive routine exhausted its budget."""
