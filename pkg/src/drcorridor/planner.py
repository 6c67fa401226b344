"""Scikit-learn style front end for the corridor trajectory pipeline.

``CorridorTrajectoryPlanner`` holds plain hyperparameters in its
constructor (so ``get_params`` / ``set_params`` / ``clone`` compose with
the wider ecosystem), solves the corridor QP in ``fit`` and exposes the
fitted trajectory through ``predict``/``sample``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import bezier
from .corridor import BoxRegion, InitialPath, SafeCorridor, allocate_times
from .elliptical import GeneratorFamily
from .qp import SnapSpec, plan
from .tightening import make_uniform_specs


def family_from_name(name: str, dof: float | None = None) -> GeneratorFamily:
    """Parse a family label; aliases cover common spellings."""
    key = str(name).strip().lower().replace("-", "_")
    if key in ("normal", "gauss", "gaussian"):
        return GeneratorFamily.normal()
    if key in ("student_t", "studentt", "t", "student"):
        if dof is None:
            raise ValueError("student_t needs degrees of freedom (dof)")
        return GeneratorFamily.student_t(dof)
    if key == "logistic":
        return GeneratorFamily.logistic()
    raise ValueError(f"unknown distribution family {name!r}")


def as_corridor(obj) -> SafeCorridor:
    """Accept a SafeCorridor or a sequence of (lower, upper) pairs."""
    if isinstance(obj, SafeCorridor):
        return obj
    try:
        regions = tuple(BoxRegion(lo, up) for lo, up in obj)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"cannot interpret {type(obj).__name__} as a corridor: {exc}") from exc
    return SafeCorridor(regions)


def as_path(obj, v_max: float = 2.0, tau_min: float = 0.1) -> InitialPath:
    """Accept an InitialPath or a waypoint array (times then allocated)."""
    if isinstance(obj, InitialPath):
        return obj
    waypoints = np.atleast_2d(np.asarray(obj, dtype=float))
    times = allocate_times(waypoints, v_max=v_max, tau_min=tau_min)
    return InitialPath(waypoints, times)


class CorridorTrajectoryPlanner(BaseEstimator):
    """Minimum-snap corridor planner with optional robust bound tightening.

    Parameters mirror the planning pipeline: Bezier degree and objective
    derivative order, planning mode ("nominal" or "drscc"), and in drscc
    mode the ambiguity description (family/dof/sigma/radius/risk) that is
    broadcast to every region corner. ``fit(corridor, path)`` solves the
    QP; ``predict(times)`` evaluates the fitted trajectory (optionally a
    derivative order) at absolute times.
    """

    def __init__(
        self,
        degree: int = 7,
        objective_order: int = 4,
        mode: str = "nominal",
        family: str = "normal",
        dof: float = 4.0,
        sigma: float = 1.0,
        radius: float = 0.05,
        risk: float = 0.1,
        v_max: float = 2.0,
        tau_min: float = 0.1,
        derivative_limits: dict | None = None,
        solver_tol: float = 1e-8,
        max_iter: int = 20000,
    ):
        self.degree = degree
        self.objective_order = objective_order
        self.mode = mode
        self.family = family
        self.dof = dof
        self.sigma = sigma
        self.radius = radius
        self.risk = risk
        self.v_max = v_max
        self.tau_min = tau_min
        self.derivative_limits = derivative_limits
        self.solver_tol = solver_tol
        self.max_iter = max_iter

    def fit(self, corridor, path):
        """Solve the corridor QP; stores trajectory_, solution_, tightened_."""
        corridor = as_corridor(corridor)
        path = as_path(path, v_max=self.v_max, tau_min=self.tau_min)
        spec = SnapSpec(
            degree=self.degree,
            objective_order=self.objective_order,
            derivative_limits=self.derivative_limits,
        )
        ambiguity = None
        if self.mode == "drscc":
            fam = family_from_name(self.family, self.dof)
            ambiguity = make_uniform_specs(corridor, fam, self.sigma, self.radius, self.risk)
        result = plan(
            corridor, path, spec, mode=self.mode, ambiguity=ambiguity,
            tol=self.solver_tol, max_iter=self.max_iter,
        )
        self.trajectory_ = result.trajectory
        self.solution_ = result.solution
        self.tightened_ = result.tightened
        self.objective_ = result.solution.objective
        return self

    def _check_fitted(self):
        if not hasattr(self, "trajectory_"):
            raise NotFittedError(
                "this CorridorTrajectoryPlanner is not fitted yet; call fit first"
            )

    def predict(self, times, order: int = 0) -> np.ndarray:
        """Trajectory positions (or an order-th derivative) at absolute times."""
        self._check_fitted()
        times = np.asarray(times, dtype=float).reshape(-1)
        return np.array([bezier.evaluate_at(self.trajectory_, t, order) for t in times])

    def sample(self, resolution: int = 100):
        """(times, positions) at `resolution` normalized times per segment."""
        self._check_fitted()
        return bezier.sample(self.trajectory_, resolution)
