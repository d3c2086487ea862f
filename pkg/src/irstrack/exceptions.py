"""Exception types raised across the package."""

from sklearn.exceptions import NotFittedError

__all__ = ["NumericalError", "ConfigurationError", "TrainingError", "NotFittedError"]


class NumericalError(ArithmeticError):
    """A linear-algebra routine met a matrix it cannot handle (singular, indefinite)."""


class ConfigurationError(ValueError):
    """Inconsistent or unknown configuration values."""


class TrainingError(RuntimeError):
    """Network training diverged (non-finite loss)."""
