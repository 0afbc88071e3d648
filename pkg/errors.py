"""
errors.py - exception hierarchy for mcmc-certify.

Every error raised by the library derives from CertifyError and carries the
exit code the command-line front end returns for it.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
from typing import Optional, Sequence

# ------------------------ Exit Codes ------------------------
EXIT_SUCCESS = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PROPERTY = 4


# ------------------------ Exceptions ------------------------
class CertifyError(Exception):
    """Base class for all mcmc-certify errors."""

    exit_code = EXIT_UNEXPECTED


class ConfigurationError(CertifyError, ValueError):
    """Invalid configuration value or empty input."""

    exit_code = EXIT_CONFIG

    def __init__(self, message: str, field: Optional[str] = None):
        """Store the offending field path next to the message."""
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class PreconditionError(ConfigurationError):
    """A mathematical precondition of an operation does not hold."""


class CertificateInvalidError(CertifyError):
    """The contraction factor beta_bar is not below one."""

    exit_code = EXIT_NUMERICAL

    def __init__(
        self,
        message: str,
        beta_bar: Optional[float] = None,
        minimal_R: Optional[float] = None,
        scanned_beta_bars: Optional[Sequence[float]] = None,
    ):
        """Keep the failing beta_bar and the smallest R that would work."""
        super().__init__(message)
        self.beta_bar = beta_bar
        self.minimal_R = minimal_R
        self.scanned_beta_bars = list(scanned_beta_bars or [])


class NumericalError(CertifyError, ArithmeticError):
    """Quadrature, refinement or sampling did not converge."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, achieved_tolerance: Optional[float] = None):
        """Keep the tolerance reached before giving up."""
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance


class DivergenceError(NumericalError):
    """An integral does not converge."""


class EvaluationError(NumericalError):
    """A log-density evaluated to a non-finite value."""


class EnvelopeError(NumericalError):
    """The rejection envelope M*q falls below h."""

    def __init__(self, message: str, x: Optional[float] = None):
        """Keep the violating state."""
        super().__init__(message)
        self.x = x


class PropertyCheckFailure(CertifyError):
    """A verification ran to completion and its pass flag is false."""

    exit_code = EXIT_PROPERTY
