"""Truncated Hausdorff distances between sets, epigraphs and graphs on grids."""
from .errors import InfeasibleApproximationError, InputError, PreconditionError, UnsupportedError
from .metric_core import (INF, FiniteSet, MetricSpace, RadiusBundle, excess, finite_set,
                          trunc_excess, trunc_hausdorff)
from .report import BoundReport, SideCondition

__all__ = [
    "INF", "BoundReport", "FiniteSet", "InfeasibleApproximationError", "InputError",
    "MetricSpace", "PreconditionError", "RadiusBundle", "SideCondition", "UnsupportedError",
    "excess", "finite_set", "trunc_excess", "trunc_hausdorff",
]
__version__ = "0.1.0"
