"""Exception and warning types raised across the package."""

from __future__ import annotations


class NablaError(Exception):
    """Base class for all errors raised by :mod:`nabla_fdm`."""


class DomainError(NablaError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class TraceIndexError(NablaError, IndexError):
    """A signal trace was read outside its stored range."""


class TraceLengthError(NablaError, ValueError):
    """A signal trace is too short for the requested operation."""


class DivergenceError(NablaError, ArithmeticError):
    """A truncated series was evaluated where it does not converge."""


class NumericalLimitError(NablaError, ArithmeticError):
    """A numerically extrapolated limit failed to settle."""


class ConditioningError(NablaError, ArithmeticError):
    """A least-squares problem is rank deficient or too ill-conditioned.

    The pole set in effect when the failure occurred (if any) is kept on
    :attr:`poles`, and the vector-fitting iteration on :attr:`iteration`.
    """

    def __init__(self, message, poles=None, iteration=None):
        super().__init__(message)
        self.poles = poles
        self.iteration = iteration


class EigenError(NablaError, ArithmeticError):
    """The eigenvalue solver failed during pole relocation."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ConversionError(NablaError, ArithmeticError):
    """A partial-fraction conversion hit a (near) zero pole."""


class InstabilityError(NablaError, ArithmeticError):
    """A pole violates the discrete stability condition ``|1 + w| > 1``."""


class ConfigurationError(NablaError, ValueError):
    """An approximant or system description is inconsistent with its use."""


class UnsupportedStructureError(NablaError, ValueError):
    """The dynamics depend non-affinely on the current pseudo-state."""


class StepSingularityError(NablaError, ArithmeticError):
    """The implicit linear system of one time step is singular."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class AccuracyWarning(UserWarning):
    """A numerical diagnostic exceeded its tolerance."""
