"""Minimum-derivative QP assembly over corridor-bounded Bezier segments.

The decision vector stacks all control points dimension-major:
``x[(dim * N + seg) * (n + 1) + j] = c_{seg,dim}^j``. The objective is the
integral of the squared order-k physical derivative over all segments,
box rows bound every control point by its segment's (possibly tightened)
region, equality rows pin boundary derivatives and enforce C^(k-1)
junctions, and optional inequality rows bound derivative control points.

All constraint rows act on normalized-time derivative control points with
the physical factor ``duration**(-order)``, so junction rows equate true
physical derivatives across segments of unequal duration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr

from . import solver
from .bezier import BezierSegment, PiecewiseBezier, binomial_coefficients, derivative_operator, sample
from .corridor import InitialPath, SafeCorridor, validate
from .solver import INFEASIBLE, MAX_ITER, OPTIMAL, QpSolution, solve_box_qp
from .tightening import TightenedCorridor, TighteningInfeasibleError, tighten

HULL_CHECK_RESOLUTION = 200
HULL_CHECK_TOL = 1e-7


class PlanningError(RuntimeError):
    pass


class QpInfeasibleError(PlanningError):
    def __init__(self, row_descriptions: list[str], solution: QpSolution):
        self.row_descriptions = row_descriptions
        self.solution = solution
        super().__init__(
            "QP primal infeasible; conflicting rows: " + "; ".join(row_descriptions)
        )


class SolverStalledError(PlanningError):
    def __init__(self, solution: QpSolution):
        self.solution = solution
        super().__init__(
            f"solver hit the iteration cap with residuals "
            f"(stat={solution.stationarity:.2e}, feas={solution.feasibility:.2e})"
        )


@dataclass(frozen=True)
class SnapSpec:
    """Objective order, boundary derivatives and optional derivative limits.

    ``objective_order`` k penalizes the k-th derivative (4 = snap) and
    implies C^(k-1) junction continuity, which needs degree >= 2k-1.
    ``start_derivatives``/``end_derivatives`` hold orders 1..k-1 as rows
    (positions come from the path endpoints); None means at rest.
    ``derivative_limits`` maps order g in 1..k-1 to (min, max) bounds
    applied per dimension to the derivative control points.
    """

    degree: int = 7
    objective_order: int = 4
    start_derivatives: np.ndarray | None = None
    end_derivatives: np.ndarray | None = None
    derivative_limits: dict[int, tuple[float, float]] | None = None

    def __post_init__(self):
        k = self.objective_order
        if k < 1:
            raise ValueError(f"objective order must be >= 1, got {k}")
        if self.degree < 2 * k - 1:
            raise ValueError(
                f"degree {self.degree} too low for objective order {k}; need >= {2 * k - 1}"
            )
        for name in ("start_derivatives", "end_derivatives"):
            val = getattr(self, name)
            if val is not None:
                arr = np.atleast_2d(np.asarray(val, dtype=float))
                if arr.shape[0] != k - 1:
                    raise ValueError(
                        f"{name} must have {k - 1} rows (orders 1..{k - 1}), got {arr.shape[0]}"
                    )
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.derivative_limits:
            for g, (lo, hi) in self.derivative_limits.items():
                if not 1 <= g <= k - 1:
                    raise ValueError(f"derivative limit order {g} outside 1..{k - 1}")
                if not lo < hi:
                    raise ValueError(f"derivative limit for order {g} needs min < max")


_energy_cache: dict[tuple[int, int], np.ndarray] = {}


def _segment_energy(n: int, k: int) -> np.ndarray:
    """Gram matrix of the k-th normalized derivative in control-point space.

    Uses the Bernstein product identity
    ``b_d^p b_d^q = C(d,p) C(d,q) / C(2d,p+q) * b_{2d}^{p+q}`` and
    ``int_0^1 b_{2d}^r = 1 / (2d + 1)``, all in exact integer binomials.
    """
    key = (n, k)
    if key not in _energy_cache:
        d = n - k
        cd = binomial_coefficients(d).astype(float)
        c2d = binomial_coefficients(2 * d).astype(float)
        p = np.arange(d + 1)
        gram = cd[:, None] * cd[None, :] / (c2d[p[:, None] + p[None, :]] * (2 * d + 1))
        D = derivative_operator(n, k)
        E = D.T @ gram @ D
        E = 0.5 * (E + E.T)
        E.setflags(write=False)
        _energy_cache[key] = E
    return _energy_cache[key]


def assemble_objective(num_segments: int, degree: int, order: int, durations, dim: int) -> np.ndarray:
    """Block-diagonal PSD objective matrix over segments and dimensions.

    Each block is ``duration**(1 - 2k)`` times the normalized-time energy
    matrix, which equals the integral of the squared order-k physical
    derivative. Polynomials of degree < k produce exactly zero cost.
    """
    if degree < 2 * order - 1:
        raise ValueError(f"degree {degree} too low for objective order {order}")
    durations = np.asarray(durations, dtype=float).reshape(-1)
    if durations.shape[0] != num_segments or np.any(durations <= 0.0):
        raise ValueError("need one positive duration per segment")
    base = _segment_energy(degree, order)
    size = dim * num_segments * (degree + 1)
    Q = np.zeros((size, size))
    w = degree + 1
    for d in range(dim):
        for i in range(num_segments):
            off = (d * num_segments + i) * w
            Q[off : off + w, off : off + w] = durations[i] ** (1 - 2 * order) * base
    return Q


@dataclass
class QpProblem:
    """Quadratic objective with equality, variable-bound and inequality blocks."""

    Q: np.ndarray
    q: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    G: np.ndarray
    g_lb: np.ndarray
    g_ub: np.ndarray
    eq_labels: list = field(default_factory=list)
    var_labels: list = field(default_factory=list)
    g_labels: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Q = 0.5 * (np.asarray(self.Q, float) + np.asarray(self.Q, float).T)
        nvar = self.Q.shape[0]
        self.q = np.asarray(self.q, float).reshape(nvar)
        self.A_eq = np.asarray(self.A_eq, float).reshape(-1, nvar)
        self.b_eq = np.asarray(self.b_eq, float).reshape(self.A_eq.shape[0])
        self.lb = np.asarray(self.lb, float).reshape(nvar)
        self.ub = np.asarray(self.ub, float).reshape(nvar)
        self.G = np.asarray(self.G, float).reshape(-1, nvar)
        self.g_lb = np.asarray(self.g_lb, float).reshape(self.G.shape[0])
        self.g_ub = np.asarray(self.g_ub, float).reshape(self.G.shape[0])
        if self.Q.size:
            min_eig = float(np.linalg.eigvalsh(self.Q).min())
            if min_eig < -1e-8:
                raise ValueError(f"objective matrix is not PSD (min eigenvalue {min_eig:.3e})")

    @property
    def num_variables(self) -> int:
        return self.Q.shape[0]

    def stacked_rows(self):
        """(A, l, u) in solver form: equality rows, variable boxes, inequalities."""
        nvar = self.num_variables
        A = np.vstack([self.A_eq, np.eye(nvar), self.G])
        l = np.concatenate([self.b_eq, self.lb, self.g_lb])
        u = np.concatenate([self.b_eq, self.ub, self.g_ub])
        return A, l, u

    def row_description(self, idx: int) -> str:
        n_eq = self.A_eq.shape[0]
        nvar = self.num_variables
        if idx < n_eq:
            return f"equality {self.eq_labels[idx] if self.eq_labels else idx}"
        if idx < n_eq + nvar:
            lab = self.var_labels[idx - n_eq] if self.var_labels else idx - n_eq
            return f"bound {lab}"
        lab = self.g_labels[idx - n_eq - nvar] if self.g_labels else idx - n_eq - nvar
        return f"inequality {lab}"


def _variable_index(dim: int, seg: int, j: int, num_segments: int, degree: int) -> int:
    return (dim * num_segments + seg) * (degree + 1) + j


def _drop_redundant_rows(A: np.ndarray, b: np.ndarray, labels: list, tol: float = 1e-10):
    """Keep a maximal independent row subset (rank-revealing QR on A')."""
    if A.shape[0] == 0:
        return A, b, labels
    _, R, piv = qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1.0))) if diag.size else 0
    keep = np.sort(piv[:rank])
    if rank < A.shape[0]:
        x0, *_ = np.linalg.lstsq(A[keep], b[keep], rcond=None)
        dropped = np.setdiff1d(np.arange(A.shape[0]), keep)
        gap = np.abs(A[dropped] @ x0 - b[dropped]).max(initial=0.0)
        if gap > 1e-8:
            raise ValueError(
                f"equality rows are mutually inconsistent (residual {gap:.2e} on redundant rows)"
            )
    return A[keep], b[keep], [labels[i] for i in keep]


def assemble_constraints(bounds_source, path: InitialPath, spec: SnapSpec) -> QpProblem:
    """Full QP for a corridor (nominal bounds) or a tightened corridor.

    Box rows bound every control point of segment i by region i's bounds;
    equality rows pin start/end derivatives up to order k-1 and match
    physical derivatives at junctions; optional rows bound derivative
    control points per order. Redundant equality rows are eliminated by
    rank-revealing factorization.
    """
    if isinstance(bounds_source, TightenedCorridor):
        if not bounds_source.feasible:
            raise TighteningInfeasibleError(list(bounds_source.crossings))
        corridor = bounds_source.corridor
    elif isinstance(bounds_source, SafeCorridor):
        corridor = bounds_source
    else:
        raise TypeError(f"expected SafeCorridor or TightenedCorridor, got {type(bounds_source)}")

    lowers = bounds_source.lowers
    uppers = bounds_source.uppers
    N = corridor.num_regions
    m = corridor.dimension
    if path.num_segments != N:
        raise ValueError(f"path has {path.num_segments} segments, corridor has {N} regions")
    if path.dimension != m:
        raise ValueError(f"path dimension {path.dimension} != corridor dimension {m}")

    n = spec.degree
    k = spec.objective_order
    taus = path.durations
    w = n + 1
    nvar = m * N * w

    Q = assemble_objective(N, n, k, taus, m)
    q = np.zeros(nvar)

    lb = np.empty(nvar)
    ub = np.empty(nvar)
    var_labels = [None] * nvar
    for d in range(m):
        for i in range(N):
            off = _variable_index(d, i, 0, N, n)
            lb[off : off + w] = lowers[i, d]
            ub[off : off + w] = uppers[i, d]
            for j in range(w):
                var_labels[off + j] = ("box", i, j, d)

    ops = [derivative_operator(n, l) for l in range(k)]
    rows, rhs, labels = [], [], []

    def block_row(dim: int, seg: int, coeffs: np.ndarray) -> np.ndarray:
        row = np.zeros(nvar)
        off = _variable_index(dim, seg, 0, N, n)
        row[off : off + w] = coeffs
        return row

    start = np.vstack([path.waypoints[0]] + (
        [spec.start_derivatives] if spec.start_derivatives is not None else [np.zeros((k - 1, m))]
    ))
    end = np.vstack([path.waypoints[-1]] + (
        [spec.end_derivatives] if spec.end_derivatives is not None else [np.zeros((k - 1, m))]
    ))
    if start.shape[1] != m or end.shape[1] != m:
        raise ValueError("boundary derivative rows must match the corridor dimension")

    for d in range(m):
        for l in range(k):
            rows.append(block_row(d, 0, ops[l][0] * taus[0] ** (-l)))
            rhs.append(start[l, d])
            labels.append(("start", l, d))
            rows.append(block_row(d, N - 1, ops[l][-1] * taus[N - 1] ** (-l)))
            rhs.append(end[l, d])
            labels.append(("end", l, d))
        for i in range(N - 1):
            for phi in range(k):
                row = block_row(d, i, ops[phi][-1] * taus[i] ** (-phi))
                off = _variable_index(d, i + 1, 0, N, n)
                row[off : off + w] -= ops[phi][0] * taus[i + 1] ** (-phi)
                rows.append(row)
                rhs.append(0.0)
                labels.append(("junction", i, phi, d))

    A_eq = np.array(rows) if rows else np.zeros((0, nvar))
    b_eq = np.array(rhs)
    A_eq, b_eq, labels = _drop_redundant_rows(A_eq, b_eq, labels)

    g_rows, g_lo, g_hi, g_labels = [], [], [], []
    if spec.derivative_limits:
        for g in sorted(spec.derivative_limits):
            lo, hi = spec.derivative_limits[g]
            op = derivative_operator(n, g)
            for d in range(m):
                for i in range(N):
                    scale = taus[i] ** (-g)
                    for j in range(op.shape[0]):
                        g_rows.append(block_row(d, i, op[j] * scale))
                        g_lo.append(lo)
                        g_hi.append(hi)
                        g_labels.append(("deriv_limit", g, i, j, d))
    G = np.array(g_rows) if g_rows else np.zeros((0, nvar))

    return QpProblem(
        Q, q, A_eq, b_eq, lb, ub, G,
        np.array(g_lo), np.array(g_hi),
        eq_labels=labels, var_labels=var_labels, g_labels=g_labels,
        meta={"num_segments": N, "degree": n, "dimension": m,
              "objective_order": k, "durations": taus.copy()},
    )


def solve(problem: QpProblem, tol: float = 1e-8, max_iter: int = 20000) -> QpSolution:
    """Solve an assembled problem with the embedded splitting solver."""
    A, l, u = problem.stacked_rows()
    return solve_box_qp(problem.Q, problem.q, A, l, u, tol=tol, max_iter=max_iter)


@dataclass
class PlanResult:
    trajectory: PiecewiseBezier
    solution: QpSolution
    tightened: TightenedCorridor | None
    problem: QpProblem


def _reshape_solution(x: np.ndarray, path: InitialPath, N: int, n: int, m: int) -> PiecewiseBezier:
    taus = path.durations
    segments = []
    for i in range(N):
        cps = np.empty((n + 1, m))
        for d in range(m):
            off = _variable_index(d, i, 0, N, n)
            cps[:, d] = x[off : off + n + 1]
        segments.append(BezierSegment(cps, taus[i]))
    return PiecewiseBezier(tuple(segments), start_time=float(path.arrival_times[0]))


def plan(
    corridor: SafeCorridor,
    path: InitialPath,
    spec: SnapSpec | None = None,
    mode: str = "nominal",
    ambiguity=None,
    tol: float = 1e-8,
    max_iter: int = 20000,
) -> PlanResult:
    """End-to-end pipeline: (tighten) -> assemble -> solve -> trajectory.

    In drscc mode the corridor bounds are first tightened under the given
    per-(region, side) ambiguity entries; infeasible tightening aborts
    before the QP. The returned trajectory is post-checked by sampling to
    stay inside its (tightened) boxes.
    """
    if mode not in ("nominal", "drscc"):
        raise ValueError(f"mode must be 'nominal' or 'drscc', got {mode!r}")
    issues = validate(corridor, path)
    if issues:
        raise ValueError("invalid corridor/path: " + "; ".join(str(i) for i in issues))
    if spec is None:
        spec = SnapSpec()

    tightened = None
    if mode == "drscc":
        if ambiguity is None:
            raise ValueError("drscc mode needs an ambiguity specification")
        tightened = tighten(corridor, ambiguity)
        if not tightened.feasible:
            raise TighteningInfeasibleError(list(tightened.crossings))
        bounds_source = tightened
    else:
        bounds_source = corridor

    problem = assemble_constraints(bounds_source, path, spec)
    solution = solve(problem, tol=tol, max_iter=max_iter)
    if solution.status == INFEASIBLE:
        raise QpInfeasibleError(
            [problem.row_description(i) for i in solution.violated_rows], solution
        )
    if solution.status == MAX_ITER:
        raise SolverStalledError(solution)

    traj = _reshape_solution(solution.x, path, problem.meta["num_segments"],
                             spec.degree, problem.meta["dimension"])
    exceed = max_box_violation(traj, bounds_source.lowers, bounds_source.uppers,
                               HULL_CHECK_RESOLUTION)
    if exceed > HULL_CHECK_TOL:
        raise PlanningError(
            f"optimal trajectory exits its boxes by {exceed:.2e} (> {HULL_CHECK_TOL:g})"
        )
    return PlanResult(traj, solution, tightened, problem)


def max_box_violation(traj: PiecewiseBezier, lowers, uppers, resolution: int) -> float:
    """Largest sampled exit of segment i from its region-i box (0 if inside)."""
    lowers = np.asarray(lowers, float)
    uppers = np.asarray(uppers, float)
    worst = 0.0
    ss = np.linspace(0.0, 1.0, resolution)
    from .bezier import basis_matrix

    for i, seg in enumerate(traj.segments):
        pts = basis_matrix(seg.degree, ss) @ seg.control_points
        below = (lowers[i] - pts).max(initial=0.0)
        above = (pts - uppers[i]).max(initial=0.0)
        worst = max(worst, float(below), float(above))
    return worst


def export_triplet(matrix: np.ndarray, path: str, drop_tol: float = 0.0):
    """Write a matrix as sparse triplets: 'rows cols nnz' then 'i j value' lines."""
    matrix = np.asarray(matrix, float)
    ii, jj = np.nonzero(np.abs(matrix) > drop_tol)
    lines = [f"{matrix.shape[0]} {matrix.shape[1]} {len(ii)}"]
    lines += [f"{i} {j} {matrix[i, j]!r}" for i, j in zip(ii, jj)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_triplet(path: str) -> np.ndarray:
    """Inverse of :func:`export_triplet`."""
    with open(path) as fh:
        header = fh.readline().split()
        rows, cols, nnz = int(header[0]), int(header[1]), int(header[2])
        out = np.zeros((rows, cols))
        for _ in range(nnz):
            i, j, v = fh.readline().split()
            out[int(i), int(j)] = float(v)
    return out


def export_problem(problem: QpProblem, directory: str):
    """Dump objective/equality/inequality matrices and bound vectors to a directory."""
    import os

    os.makedirs(directory, exist_ok=True)
    export_triplet(problem.Q, os.path.join(directory, "objective.triplet"))
    export_triplet(problem.A_eq, os.path.join(directory, "equality.triplet"))
    export_triplet(problem.G, os.path.join(directory, "inequality.triplet"))
    np.savetxt(os.path.join(directory, "equality_rhs.txt"), problem.b_eq)
    np.savetxt(os.path.join(directory, "variable_bounds.txt"),
               np.column_stack([problem.lb, problem.ub]))
    if problem.G.shape[0]:
        np.savetxt(os.path.join(directory, "inequality_bounds.txt"),
                   np.column_stack([problem.g_lb, problem.g_ub]))
