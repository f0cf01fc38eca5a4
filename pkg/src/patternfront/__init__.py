"""Modulating pattern-forming fronts in Swift-Hohenberg coupled to a conservation law."""

from .model import ConfigError, DomainError, FieldPair, ModelParams, derived_delta, make_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "FieldPair",
    "ModelParams",
    "__version__",
    "derived_delta",
    "make_grid",
]
