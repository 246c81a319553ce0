"""Exception hierarchy. The CLI maps each class to an exit code."""


class ApstatError(Exception):
    """Base class for all package errors."""


class ConfigError(ApstatError):
    """Invalid or unknown configuration (CLI exit code 2)."""


class HypothesisError(ApstatError):
    """Inputs violate the hypotheses an operation needs (exit code 3)."""


class UnboundedTailError(HypothesisError):
    """A kernel has no declared decay, so no truncation window exists."""


class NumericalError(ApstatError):
    """A quadrature, solver or bisection failed to converge (exit code 4)."""


class QuadratureError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class SupportTooLargeError(HypothesisError):
    """An exact small-support solver was handed too many atoms."""
