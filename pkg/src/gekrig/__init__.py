"""Kriging surrogates with PLS-reduced and gradient-enhanced variants."""
from .benchmarks import get_function, relative_error
from .doe import Bounds, lhs
from .errors import GekrigError
from .models import FitOptions, FittedSurrogate, GeKplsConfig, TrainingData, fit, load, save

__all__ = [
    "Bounds",
    "FitOptions",
    "FittedSurrogate",
    "GeKplsConfig",
    "GekrigError",
    "TrainingData",
    "fit",
    "get_function",
    "lhs",
    "load",
    "relative_error",
    "save",
]
__version__ = "0.1.0"
