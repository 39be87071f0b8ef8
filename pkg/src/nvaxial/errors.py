"""Exception types raised across the package."""


class NVAxialError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NVAxialError, ValueError):
    """An argument lies outside the domain where a formula applies."""


class ConfigError(NVAxialError, ValueError):
    """A configuration value or file is invalid.

    ``line`` and ``column`` are 1-based positions in the config file when the
    error comes from parsing; both are ``None`` for programmatic errors.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class SingularityError(NVAxialError, ArithmeticError):
    """A response function hit a pole. ``delta`` is the offending detuning."""

    def __init__(self, message, delta=None):
        self.delta = delta
        super().__init__(message)


class ConsistencyError(NVAxialError, RuntimeError):
    """Internal consistency check failed (e.g. no physical root of a cubic)."""


class RegimeError(NVAxialError, ValueError):
    """A signed closed form was used outside its sign regime."""


class WindowTooNarrowError(NVAxialError, ValueError):
    """The spectral extremum sits on the edge of the scanned window."""


class AccuracyError(NVAxialError, RuntimeError):
    """Quadrature did not reach the requested tolerance.

    ``estimate`` and ``error`` hold the best value reached and its error bound.
    """

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class NotConvergedError(NVAxialError, RuntimeError):
    """Time-domain demodulation drifted between blocks."""
