"""Bernstein-basis polynomial segments and piecewise Bezier trajectories.

A segment of degree ``n`` is a curve ``B(s) = sum_j c_j * b_n^j(s)`` on
normalized time ``s in [0, 1]``, where ``b_n^j(s) = C(n, j) s^j (1-s)^(n-j)``.
Physical time runs over ``[T, T + duration]`` with ``s = (t - T) / duration``,
so the order-``l`` physical derivative picks up a factor ``duration**(-l)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DEGREE = 30

_binomial_rows: dict[int, np.ndarray] = {}


def binomial_coefficients(n: int) -> np.ndarray:
    """Row ``n`` of Pascal's triangle as exact int64 (cached per degree)."""
    if n < 0 or n > MAX_DEGREE:
        raise ValueError(f"degree must be in [0, {MAX_DEGREE}], got {n}")
    row = _binomial_rows.get(n)
    if row is None:
        vals = [1]
        for _ in range(n):
            vals = [1] + [vals[i] + vals[i + 1] for i in range(len(vals) - 1)] + [1]
        row = np.array(vals, dtype=np.int64)
        row.setflags(write=False)
        _binomial_rows[n] = row
    return row


def basis(n: int, j: int, t: float) -> float:
    """Bernstein basis value ``C(n,j) t^j (1-t)^(n-j)`` at normalized time t."""
    if not 0 <= j <= n:
        raise ValueError(f"basis index must satisfy 0 <= j <= {n}, got {j}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"normalized time must lie in [0, 1], got {t}")
    coeff = float(binomial_coefficients(n)[j])
    return coeff * t**j * (1.0 - t) ** (n - j)


def basis_row(n: int, t: float) -> np.ndarray:
    """All ``n+1`` basis values at t, as one vector."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"normalized time must lie in [0, 1], got {t}")
    j = np.arange(n + 1)
    return binomial_coefficients(n).astype(float) * t**j * (1.0 - t) ** (n - j)


def basis_matrix(n: int, ts: np.ndarray) -> np.ndarray:
    """Stack of basis rows, shape ``(len(ts), n+1)``."""
    ts = np.asarray(ts, dtype=float)
    if ts.size and (ts.min() < 0.0 or ts.max() > 1.0):
        raise ValueError("normalized times must lie in [0, 1]")
    j = np.arange(n + 1)
    t = ts[:, None]
    return binomial_coefficients(n).astype(float) * t**j * (1.0 - t) ** (n - j)


def derivative_operator(n: int, order: int) -> np.ndarray:
    """Matrix taking control points to order-th derivative control points.

    One differentiation step of a degree-``d`` curve multiplies forward
    differences by ``d``; composing ``order`` steps from degree ``n`` gives
    the cumulative factor ``n! / (n - order)!``. The result has shape
    ``(n - order + 1, n + 1)`` and acts on normalized time, i.e. without
    the ``duration**(-order)`` physical scaling.
    """
    if not 0 <= order <= n:
        raise ValueError(f"derivative order must satisfy 0 <= order <= {n}, got {order}")
    op = np.eye(n + 1)
    for l in range(1, order + 1):
        rows = n - l + 1
        step = np.zeros((rows, rows + 1))
        idx = np.arange(rows)
        step[idx, idx] = -(n - l + 1)
        step[idx, idx + 1] = n - l + 1
        op = step @ op
    return op


@dataclass(frozen=True)
class BezierSegment:
    """One Bezier piece: ``(n+1, m)`` control points and a positive duration."""

    control_points: np.ndarray
    duration: float

    def __post_init__(self):
        cps = np.atleast_2d(np.asarray(self.control_points, dtype=float))
        if cps.ndim != 2 or cps.shape[0] < 2:
            raise ValueError("control_points must be an (n+1, m) array with n >= 1")
        if cps.shape[0] - 1 > MAX_DEGREE:
            raise ValueError(f"degree must not exceed {MAX_DEGREE}")
        if not np.isfinite(cps).all():
            raise ValueError("control points must be finite")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        cps.setflags(write=False)
        object.__setattr__(self, "control_points", cps)
        object.__setattr__(self, "duration", float(self.duration))

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.control_points.shape[1]


def evaluate(segment: BezierSegment, t: float) -> np.ndarray:
    """Curve point at normalized time ``t in [0, 1]`` as an m-vector."""
    return basis_row(segment.degree, t) @ segment.control_points


def derivative_control_points(
    segment: BezierSegment, order: int, physical: bool = False
) -> np.ndarray:
    """Control points of the order-th derivative curve.

    With ``physical=True`` the result is additionally scaled by
    ``duration**(-order)`` so that evaluating the returned points against
    the degree ``n - order`` basis yields the derivative with respect to
    physical time.
    """
    a = derivative_operator(segment.degree, order) @ segment.control_points
    if physical:
        a = a * segment.duration ** (-order)
    return a


def evaluate_derivative(segment: BezierSegment, t: float, order: int) -> np.ndarray:
    """Order-th physical-time derivative of the curve at normalized time t."""
    a = derivative_control_points(segment, order, physical=True)
    return basis_row(segment.degree - order, t) @ a


@dataclass(frozen=True)
class PiecewiseBezier:
    """Ordered Bezier segments sharing degree and dimension, plus a start time."""

    segments: tuple[BezierSegment, ...]
    start_time: float = 0.0

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("trajectory needs at least one segment")
        n, m = segs[0].degree, segs[0].dimension
        for k, seg in enumerate(segs):
            if seg.degree != n or seg.dimension != m:
                raise ValueError(
                    f"segment {k} has degree/dimension ({seg.degree}, {seg.dimension}), "
                    f"expected ({n}, {m})"
                )
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "start_time", float(self.start_time))

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    @property
    def degree(self) -> int:
        return self.segments[0].degree

    @property
    def dimension(self) -> int:
        return self.segments[0].dimension

    @property
    def durations(self) -> np.ndarray:
        return np.array([seg.duration for seg in self.segments])

    @property
    def boundary_times(self) -> np.ndarray:
        """Absolute times T_0, ..., T_N delimiting the segments."""
        return self.start_time + np.concatenate(([0.0], np.cumsum(self.durations)))

    @property
    def end_time(self) -> float:
        return float(self.boundary_times[-1])


def sample(traj: PiecewiseBezier, resolution: int):
    """Sample every segment at ``resolution`` uniformly spaced normalized times.

    Both endpoints of each segment are included, so interior boundary times
    appear twice (once per adjacent segment). Returns ``(times, points)``
    with shapes ``(N * resolution,)`` and ``(N * resolution, m)``.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    ss = np.linspace(0.0, 1.0, resolution)
    bounds = traj.boundary_times
    times, points = [], []
    for i, seg in enumerate(traj.segments):
        times.append(bounds[i] + ss * seg.duration)
        points.append(basis_matrix(seg.degree, ss) @ seg.control_points)
    return np.concatenate(times), np.vstack(points)


def sample_derivative(traj: PiecewiseBezier, resolution: int, order: int):
    """Like :func:`sample` but for the order-th physical derivative."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    ss = np.linspace(0.0, 1.0, resolution)
    bounds = traj.boundary_times
    times, points = [], []
    for i, seg in enumerate(traj.segments):
        a = derivative_control_points(seg, order, physical=True)
        times.append(bounds[i] + ss * seg.duration)
        points.append(basis_matrix(seg.degree - order, ss) @ a)
    return np.concatenate(times), np.vstack(points)


def evaluate_at(traj: PiecewiseBezier, t: float, order: int = 0) -> np.ndarray:
    """Evaluate position (or an order-th derivative) at an absolute time."""
    bounds = traj.boundary_times
    tol = 1e-9 * max(1.0, abs(bounds[-1]))
    if t < bounds[0] - tol or t > bounds[-1] + tol:
        raise ValueError(f"time {t} outside trajectory horizon [{bounds[0]}, {bounds[-1]}]")
    i = int(np.searchsorted(bounds, t, side="right") - 1)
    i = min(max(i, 0), traj.num_segments - 1)
    seg = traj.segments[i]
    s = (t - bounds[i]) / seg.duration
    s = min(max(s, 0.0), 1.0)
    if order == 0:
        return evaluate(seg, s)
    return evaluate_derivative(seg, s, order)
