"""Exception hierarchy shared by every flsim module."""


class FlsimError(Exception):
    """Base class for all errors raised by flsim."""


class InvalidInputError(FlsimError, ValueError):
    """An argument violates a documented precondition."""


class DimensionMismatchError(InvalidInputError):
    """Operators that must act on the same space have different dimensions."""


class BranchAmbiguityError(FlsimError, ArithmeticError):
    """The principal matrix logarithm is not defined.

    Raised when an eigenvalue sits on (or within tolerance of) the closed
    negative real axis, where the principal branch is ambiguous.
    """

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class NumericalError(FlsimError, ArithmeticError):
    """A numerical routine failed to converge or produced garbage."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StiffnessError(NumericalError):
    """Adaptive integration step size underflowed."""

    def __init__(self, message, time):
        super().__init__(message, {"time": time})
        self.time = time


class NonUniqueSteadyStateError(NumericalError):
    """More than one (or no) eigenvalue qualifies as the zero mode."""


class CoverageError(InvalidInputError):
    """A noise trace does not cover the requested time span."""


class ConfigError(InvalidInputError):
    """An experiment configuration failed validation."""
