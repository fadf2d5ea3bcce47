"""Exception hierarchy shared by every module."""


class QPJError(Exception):
    """Base class for all library errors."""


class UsageError(QPJError, ValueError):
    """Bad arguments: dimension mismatch, invalid window, bad config."""


class DomainError(QPJError, ValueError):
    """Input outside the domain where an operation is defined."""


class ModelValidationError(QPJError, ValueError):
    """A model violates one of its construction invariants."""


class ModelParseError(QPJError, ValueError):
    """Malformed model file. Carries the offending line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SingularPhaseError(QPJError, ArithmeticError):
    """A transfer matrix needs c at a phase where c vanishes."""

    def __init__(self, message, site=None, phase=None):
        self.site = site
        self.phase = phase
        super().__init__(message)


class ConvergenceError(QPJError, ArithmeticError):
    """An iterative estimate did not converge; keeps the last two estimates."""

    def __init__(self, message, estimates=()):
        self.estimates = tuple(estimates)
        super().__init__(message)


class RetryLargerTruncation(QPJError, ArithmeticError):
    """E sits on an eigenvalue of one truncation but not of the next."""


class KernelHitError(QPJError, ArithmeticError):
    """Projective action requested at a point spanning ker D."""


class PoleError(QPJError, ArithmeticError):
    """Chart coordinate hits a pole; switch to the other chart."""


class DegenerateError(QPJError, ArithmeticError):
    """Two sections coincide to tolerance (energy too close to the spectrum)."""
