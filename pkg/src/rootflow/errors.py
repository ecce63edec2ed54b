"""Exception types shared across the package."""


class RootflowError(Exception):
    """Base class for all package errors."""


class ConfigError(RootflowError):
    """Invalid parameter or configuration value."""


class InvalidMeasureError(RootflowError):
    """Measure data violates the probability-measure invariants."""


class DomainError(RootflowError):
    """Argument outside the mathematical domain of an operation."""


class ShapeError(RootflowError):
    """Mismatched grid sizes or particle counts."""


class PoleError(RootflowError):
    """Evaluation requested at (or too close to) a pole.

    ``root_index`` identifies the offending root in the configuration.
    """

    def __init__(self, message, root_index=None):
        super().__init__(message)
        self.root_index = root_index


class NumericalError(RootflowError):
    """A numerical procedure failed; ``diagnostics`` carries context."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BracketError(NumericalError):
    """Root bracketing failed to find a sign change."""


class InitialDataError(RootflowError):
    """Initial data rejected by a hard precondition of the solver."""
