"""Almost periodic stationarity for Levy-driven stochastic integrals: exponents, bounds, metrics, simulation."""

__version__ = "0.1.0"

from .errors import (ApstatError, ConfigError, HypothesisError, NumericalError, QuadratureError,
                     SupportTooLargeError, UnboundedTailError)
from .kernels import (ConstantKernel, DilateKernel, ExpKernel, IndicatorKernel, MovingAverageKernel,
                      OUKernel, SeparableKernel, TranslateKernel)
from .levy import JumpMeasure, LevyDensity, LevyTriplet, MultiTriplet
from .trig import TrigPolynomial

__all__ = [
    "ApstatError", "ConfigError", "HypothesisError", "NumericalError", "QuadratureError",
    "SupportTooLargeError", "UnboundedTailError",
    "ConstantKernel", "DilateKernel", "ExpKernel", "IndicatorKernel", "MovingAverageKernel",
    "OUKernel", "SeparableKernel", "TranslateKernel",
    "JumpMeasure", "LevyDensity", "LevyTriplet", "MultiTriplet", "TrigPolynomial",
]
