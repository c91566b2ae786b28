"""This file contains the custom error classes raised by the certification toolkit."""


class BellCertError(Exception):
    """Base class for all toolkit errors."""

    pass


class NonHermitianInputError(BellCertError):
    """Raised when an eigenvalue routine receives a matrix that is not Hermitian."""

    def __init__(self, message: str = "Matrix is not Hermitian.") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class OutOfRangeError(BellCertError):
    """Raised when a CHSH value lies outside the range a bound is defined on."""

    def __init__(self, message: str = "CHSH value outside [2, 2*sqrt(2)].") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class DomainError(BellCertError):
    """Raised when a numerical routine is called outside its domain."""

    def __init__(self, message: str = "Argument outside the function domain.") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class NoConvergenceError(BellCertError):
    """Raised when an iterative routine exhausts its iteration budget."""

    def __init__(self, message: str = "Iteration did not converge.") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class SingularConfusionError(BellCertError):
    """Raised when a readout confusion matrix cannot be inverted."""

    def __init__(
        self, message: str = "Readout fidelity must be positive to invert confusion."
    ) -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class SinkFailureError(BellCertError):
    """Raised when a trial consumer fails; reports how many trials got through."""

    def __init__(self, message: str, trials_written: int) -> None:
        """Initialize the error with the number of trials delivered before the failure."""
        super().__init__(f"{message} (trials written: {trials_written})")
        self.trials_written = trials_written


class TrialLogParseError(BellCertError):
    """Raised when a trial log or counts file is malformed."""

    def __init__(self, message: str, line_number: int) -> None:
        """Initialize the error with the offending line number (1-based)."""
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ConfigError(BellCertError):
    """Raised when an experiment configuration is invalid."""

    def __init__(self, message: str = "Invalid configuration.") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)


class UsageError(BellCertError):
    """Raised when the command line is malformed."""

    def __init__(self, message: str = "Invalid command line.") -> None:
        """Initialize the error with a custom message."""
        super().__init__(message)
