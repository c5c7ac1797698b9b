"""Exception and warning types raised across the package."""


class TraceKdVError(Exception):
    """Base class for all package errors."""


class ParameterError(TraceKdVError, ValueError):
    """Invalid grid, potential or solver parameter."""


class ConfigError(ParameterError):
    """Invalid run configuration (CLI)."""


class NumericalGuardError(TraceKdVError, ArithmeticError):
    """A numerical safeguard tripped (positivity, conditioning, convergence)."""


class PositivityError(NumericalGuardError):
    """The smallest eigenvalue of I + H fell below the configured threshold."""


class DegenerateSpectrumError(NumericalGuardError):
    """Two bound states could not be separated."""


class EnlargeMarginError(NumericalGuardError):
    """A bound-state root sits on the edge of the search interval."""


class ConvergenceError(NumericalGuardError):
    """A truncated integral or an integrator failed to converge."""


class TruncationWarning(UserWarning):
    """A quantity does not decay within the computational window."""


class ResonanceWarning(UserWarning):
    """A Wronskian came close to zero on the real axis."""
