"""Controllability and invariance pressure of discrete-time linear control systems."""

from .control_set import (
    ControlSetApprox,
    approximate_control_set,
    boundedness_classifier,
    equilibrium,
    interior_trajectory_check,
)
from .errors import AnalysisError, ParseError, SpecError
from .geometry import ConvexPolytope, box, convex_hull, hausdorff_distance, minkowski_sum
from .oracle import OracleConfig, OracleEstimate, discretization_sweep, estimate_pressure
from .potential import Potential, evaluate, minimize_over_U, parse_potential
from .pressure import (
    PressureResult,
    SpanningConstructionConfig,
    SpanningSet,
    invariance_entropy,
    invariance_pressure_formula,
    periodic_orbit,
    spanning_construction,
    upper_bound_via_periodic,
)
from .reachability import LinearSystem, control_k, reach_k, system_from_json
from .spectral import SpectralSplit, classify_global_controllability, spectral_split

__version__ = "0.1.0"

__all__ = [
    "AnalysisError", "ConvexPolytope", "ControlSetApprox", "LinearSystem", "OracleConfig",
    "OracleEstimate", "ParseError", "Potential", "PressureResult", "SpanningConstructionConfig",
    "SpanningSet", "SpecError", "SpectralSplit", "approximate_control_set",
    "boundedness_classifier", "box", "classify_global_controllability", "control_k",
    "convex_hull", "discretization_sweep", "equilibrium", "estimate_pressure", "evaluate",
    "hausdorff_distance", "interior_trajectory_check", "invariance_entropy",
    "invariance_pressure_formula", "minimize_over_U", "minkowski_sum", "parse_potential",
    "periodic_orbit", "reach_k", "spanning_construction", "spectral_split", "system_from_json",
    "upper_bound_via_periodic",
]
