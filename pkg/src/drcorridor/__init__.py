"""Trajectory planning through uncertain safe corridors.

Minimum-snap Bezier trajectories through overlapping box corridors, with
corridor-bound uncertainty handled by Wasserstein-ball tightening that
keeps the optimization a convex QP.
"""

__version__ = "0.1.0"

from .bezier import BezierSegment, PiecewiseBezier, basis, evaluate, derivative_control_points, sample
from .cases import ReferenceCase, reference_case, reference_cases
from .corridor import (
    BoxRegion,
    InitialPath,
    SafeCorridor,
    allocate_times,
    validate,
)
from .elliptical import EllipticalRef, GeneratorFamily, kappa, mahalanobis, marginal
from .planner import CorridorTrajectoryPlanner, as_corridor, as_path, family_from_name
from .qp import PlanResult, QpProblem, SnapSpec, assemble_constraints, assemble_objective, plan, solve
from .robustness import BenchmarkReport, PerturbationSpec, count_violations, perturb, run_benchmark
from .solver import QpSolution
from .tightening import (
    AmbiguitySpec,
    TightenedCorridor,
    TighteningInfeasibleError,
    lower_risk,
    make_uniform_specs,
    solve_eta_star,
    tighten,
)

__all__ = [
    "AmbiguitySpec",
    "BenchmarkReport",
    "BezierSegment",
    "BoxRegion",
    "CorridorTrajectoryPlanner",
    "EllipticalRef",
    "GeneratorFamily",
    "InitialPath",
    "PerturbationSpec",
    "PiecewiseBezier",
    "PlanResult",
    "QpProblem",
    "QpSolution",
    "ReferenceCase",
    "SafeCorridor",
    "SnapSpec",
    "TightenedCorridor",
    "TighteningInfeasibleError",
    "allocate_times",
    "as_corridor",
    "as_path",
    "assemble_constraints",
    "assemble_objective",
    "basis",
    "count_violations",
    "derivative_control_points",
    "evaluate",
    "family_from_name",
    "kappa",
    "lower_risk",
    "mahalanobis",
    "make_uniform_specs",
    "marginal",
    "perturb",
    "plan",
    "reference_case",
    "reference_cases",
    "run_benchmark",
    "sample",
    "solve",
    "solve_eta_star",
    "tighten",
    "validate",
]
