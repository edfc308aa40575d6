"""Exception types raised by the engine."""


class CavityFieldError(Exception):
    """Base class for all engine errors."""


class DimensionError(CavityFieldError, ValueError):
    """Invalid truncation dimension or mismatched operand shapes."""


class DomainError(CavityFieldError, ValueError):
    """A parameter lies outside its physical domain (e.g. negative nbar)."""


class UnsupportedSpecError(CavityFieldError, ValueError):
    """An input description the cutoff policy cannot handle."""


class ClosedFormUnsupportedError(CavityFieldError, NotImplementedError):
    """The closed-form amplitudes only cover equal detunings; use evolve_oracle."""


class ZeroNormError(CavityFieldError):
    """Ground-state post-selection has (numerically) zero probability."""

    def __init__(self, message, probability=0.0):
        super().__init__(message)
        self.probability = probability


class UndefinedStatisticError(CavityFieldError, ArithmeticError):
    """A statistic is undefined for the given state (e.g. Mandel Q at the vacuum)."""
