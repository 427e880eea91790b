"""Weighted-volume-preserving curvature flow on radial graphs.

Simulates the flow with normal speed n - u H / phi' for graphs over the
round sphere inside rotationally symmetric ambient spaces, and turns its
conservation laws, monotonicity statements, convexity preservation and
weighted geometric inequalities into machine-checkable verdicts.
"""

from .errors import (
    ConfigError,
    DomainError,
    DomainEscapeError,
    FieldShapeError,
    NotApplicableError,
    RangeError,
    SchemeInstabilityError,
    StateError,
    WvpflowError,
)
from .warp import WarpedSpace, StaticityReport, load_custom_table
from .grid import SphereGrid, build_grid
from .graphgeom import GraphState, GeometryFields, compute_fields
from .functionals import SliceProfile, weighted_area, weighted_mean_curvature_integral, weighted_volume_alpha
from .flow import FlowConfig, FlowTrace, run, speed, step
from .monitors import Verdict, epsilon0_bound

__all__ = [
    "WarpedSpace",
    "StaticityReport",
    "load_custom_table",
    "SphereGrid",
    "build_grid",
    "GraphState",
    "GeometryFields",
    "compute_fields",
    "SliceProfile",
    "weighted_volume_alpha",
    "weighted_area",
    "weighted_mean_curvature_integral",
    "FlowConfig",
    "FlowTrace",
    "run",
    "speed",
    "step",
    "Verdict",
    "epsilon0_bound",
    "ConfigError",
    "DomainError",
    "DomainEscapeError",
    "FieldShapeError",
    "NotApplicableError",
    "RangeError",
    "SchemeInstabilityError",
    "StateError",
    "WvpflowError",
]

__version__ = "0.1.0"
