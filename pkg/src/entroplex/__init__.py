"""Exact symmetry-reduced entropy LPs for coded caching tradeoffs."""

from .model import ProblemInstance, parse_var, parse_vars
from .lpbuild import LinearConstraint, build
from .ratsolve import solve
from .tradeoff import TradeoffPoint, corner_points, facets, stable_range

__all__ = [
    "LinearConstraint",
    "ProblemInstance",
    "TradeoffPoint",
    "build",
    "corner_points",
    "facets",
    "parse_var",
    "parse_vars",
    "solve",
    "stable_range",
]
