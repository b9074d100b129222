"""Differentially private release of the basic reproduction number R0 = rho(W)."""

from .errors import (
    ArgumentError,
    ConvergenceError,
    DPR0Error,
    InfeasibleBudgetError,
    InstabilityError,
    NumericDomainError,
    ParseError,
    PreconditionError,
    ValidationError,
)
from .graph import WeightBounds, WeightedGraph, parse_graph, random_connected_graph, serialize_graph
from .spectral import SpectralResult, frobenius_norm, operator_norm, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "ConvergenceError",
    "DPR0Error",
    "InfeasibleBudgetError",
    "InstabilityError",
    "NumericDomainError",
    "ParseError",
    "PreconditionError",
    "ValidationError",
    "WeightBounds",
    "WeightedGraph",
    "parse_graph",
    "random_connected_graph",
    "serialize_graph",
    "SpectralResult",
    "frobenius_norm",
    "operator_norm",
    "spectral_radius",
]
