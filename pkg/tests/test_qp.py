"""Objective assembly, constraint rows and the planning pipeline."""

import numpy as np
import pytest

from drcorridor.bezier import BezierSegment, basis_matrix, derivative_control_points, sample
from drcorridor.cases import reference_case
from drcorridor.corridor import BoxRegion, InitialPath, SafeCorridor
from drcorridor.elliptical import GeneratorFamily
from drcorridor.qp import (
    QpInfeasibleError,
    SnapSpec,
    assemble_constraints,
    assemble_objective,
    export_problem,
    export_triplet,
    max_box_violation,
    plan,
    read_triplet,
    solve,
)
from drcorridor.tightening import TighteningInfeasibleError, make_uniform_specs, tighten

NORMAL = GeneratorFamily.normal()


def snap_energy_quadrature(cps, tau, order, points=4001):
    """Simpson quadrature of the squared order-th physical derivative."""
    seg = BezierSegment(cps, duration=tau)
    a = derivative_control_points(seg, order, physical=True)
    ss = np.linspace(0.0, 1.0, points)
    vals = basis_matrix(seg.degree - order, ss) @ a
    sq = (vals**2).sum(axis=1)
    h = tau / (points - 1)
    return h / 3.0 * (sq[0] + sq[-1] + 4.0 * sq[1:-1:2].sum() + 2.0 * sq[2:-2:2].sum())


def test_objective_zero_for_constant_control_points():
    # zero up to the rounding scale of the bilinear form (entries ~1e5)
    Q = assemble_objective(2, 7, 4, [1.0, 2.0], 1)
    c = np.concatenate([np.full(8, 3.0), np.full(8, -1.0)])
    scale = np.abs(c) @ np.abs(Q) @ np.abs(c)
    assert abs(c @ Q @ c) < 1e-12 * scale


def test_objective_zero_for_linear_ramp():
    Q = assemble_objective(1, 5, 2, [1.5], 1)
    c = np.linspace(0.0, 5.0, 6)
    scale = np.abs(c) @ np.abs(Q) @ np.abs(c)
    assert abs(c @ Q @ c) < 1e-12 * scale


def test_objective_matches_quadrature_oracle():
    rng = np.random.default_rng(8)
    cps = rng.uniform(-4, 4, (8, 1))
    Q = assemble_objective(1, 7, 4, [1.0], 1)
    energy = cps[:, 0] @ Q @ cps[:, 0]
    oracle = snap_energy_quadrature(cps, 1.0, 4)
    assert abs(energy - oracle) / oracle < 1e-6


def test_objective_duration_scaling():
    rng = np.random.default_rng(9)
    cps = rng.uniform(-4, 4, (8, 1))
    tau = 2.7
    Q = assemble_objective(1, 7, 4, [tau], 1)
    energy = cps[:, 0] @ Q @ cps[:, 0]
    oracle = snap_energy_quadrature(cps, tau, 4)
    assert abs(energy - oracle) / oracle < 1e-6


def test_objective_degree_too_low():
    with pytest.raises(ValueError, match="too low"):
        assemble_objective(1, 6, 4, [1.0], 1)


def test_snap_spec_validation():
    with pytest.raises(ValueError, match="need >= 7"):
        SnapSpec(degree=6, objective_order=4)
    with pytest.raises(ValueError, match="min < max"):
        SnapSpec(derivative_limits={1: (2.0, 1.0)})
    with pytest.raises(ValueError, match="outside"):
        SnapSpec(derivative_limits={5: (-1.0, 1.0)})


def wide_corridor(n_regions=1):
    boxes = []
    for i in range(n_regions):
        boxes.append(BoxRegion([10.0 * i - 50.0, -50.0], [10.0 * i + 60.0, 50.0]))
    return SafeCorridor(tuple(boxes))


def test_endpoint_pinning_linear_case():
    # degree 1, order 1: the only equality rows pin the two control points
    corridor = wide_corridor(1)
    path = InitialPath([[0.0, 0.0], [1.0, 2.0]], [0.0, 1.0])
    problem = assemble_constraints(corridor, path, SnapSpec(degree=1, objective_order=1))
    sol = solve(problem)
    assert sol.status == "optimal"
    # dimension-major layout: x-dim control points then y-dim
    assert np.allclose(sol.x, [0.0, 1.0, 0.0, 2.0], atol=1e-8)


def test_junction_rows_enforce_physical_continuity():
    # two segments with different durations: position equal, velocity equal
    corridor = wide_corridor(2)
    path = InitialPath([[0.0, 0.0], [8.0, 1.0], [12.0, -2.0]], [0.0, 2.0, 3.0])
    spec = SnapSpec(degree=3, objective_order=2)
    result = plan(corridor, path, spec)
    s0, s1 = result.trajectory.segments
    assert np.allclose(s0.control_points[-1], s1.control_points[0], atol=1e-7)
    v_end = derivative_control_points(s0, 1, physical=True)[-1]
    v_start = derivative_control_points(s1, 1, physical=True)[0]
    assert np.allclose(v_end, v_start, atol=1e-7)


def test_high_order_junction_continuity():
    case = reference_case("zigzag")
    result = plan(case.corridor, case.path)
    for s0, s1 in zip(result.trajectory.segments, result.trajectory.segments[1:]):
        for order in range(4):
            end = derivative_control_points(s0, order, physical=True)[-1]
            start = derivative_control_points(s1, order, physical=True)[0]
            assert np.allclose(end, start, atol=1e-6)


def test_boundary_derivatives_pinned_at_rest():
    case = reference_case("elbow")
    result = plan(case.corridor, case.path)
    first = result.trajectory.segments[0]
    last = result.trajectory.segments[-1]
    assert np.allclose(first.control_points[0], case.path.waypoints[0], atol=1e-8)
    assert np.allclose(last.control_points[-1], case.path.waypoints[-1], atol=1e-8)
    for order in (1, 2, 3):
        assert np.allclose(derivative_control_points(first, order, physical=True)[0], 0.0, atol=1e-6)
        assert np.allclose(derivative_control_points(last, order, physical=True)[-1], 0.0, atol=1e-6)


def test_degenerate_ambiguity_matches_nominal_rows():
    corridor = wide_corridor(2)
    path = InitialPath([[0.0, 0.0], [8.0, 1.0], [12.0, -2.0]], [0.0, 2.0, 3.0])
    spec = SnapSpec()
    nominal = assemble_constraints(corridor, path, spec)
    specs = make_uniform_specs(corridor, NORMAL, 1e-18, 0.0, 0.4999)
    tight = tighten(corridor, specs)
    robust = assemble_constraints(tight, path, spec)
    assert np.allclose(nominal.lb, robust.lb, atol=1e-6)
    assert np.allclose(nominal.ub, robust.ub, atol=1e-6)
    assert np.allclose(nominal.A_eq, robust.A_eq)


def test_derivative_limit_rows():
    # three rest-to-rest segments peak near 2.35 unconstrained, so a
    # velocity-control-point cap at 1.8 is feasible but active
    corridor = SafeCorridor(tuple(BoxRegion([-50.0, -50.0], [60.0, 50.0]) for _ in range(3)))
    path = InitialPath([[0.0, 0.0], [3.0, 0.0], [6.0, 0.0], [9.0, 0.0]], [0.0, 3.0, 6.0, 9.0])
    free = plan(corridor, path)
    free_peak = max(
        derivative_control_points(seg, 1, physical=True).max()
        for seg in free.trajectory.segments
    )
    assert free_peak > 1.8
    spec = SnapSpec(derivative_limits={1: (-1.8, 1.8)})
    result = plan(corridor, path, spec)
    for seg in result.trajectory.segments:
        vel_cps = derivative_control_points(seg, 1, physical=True)
        assert vel_cps.min() >= -1.8 - 1e-7
        assert vel_cps.max() <= 1.8 + 1e-7
    assert result.solution.objective > free.solution.objective


def test_single_segment_rest_velocity_cap_is_infeasible():
    # one rest-to-rest degree-7 segment pins six of seven velocity control
    # points, forcing the middle one to 7*d/T; a cap below that conflicts
    corridor = wide_corridor(1)
    path = InitialPath([[0.0, 0.0], [9.0, 0.0]], [0.0, 9.0])
    with pytest.raises(QpInfeasibleError, match="deriv_limit"):
        plan(corridor, path, SnapSpec(derivative_limits={1: (-2.0, 2.0)}))


def test_plan_straight_corridor_is_near_straight_line():
    corridor = wide_corridor(1)
    path = InitialPath([[0.0, 0.0], [10.0, 0.0]], [0.0, 5.0])
    result = plan(corridor, path)
    _, pts = sample(result.trajectory, 50)
    assert np.abs(pts[:, 1]).max() < 1e-6
    xs = pts[:, 0]
    assert np.all(xs >= -1e-6) and np.all(xs <= 10.0 + 1e-6)


def test_plan_drscc_requires_ambiguity():
    case = reference_case("elbow")
    with pytest.raises(ValueError, match="ambiguity"):
        plan(case.corridor, case.path, mode="drscc")


def test_plan_rejects_invalid_corridor():
    corridor = SafeCorridor((BoxRegion([0, 0], [1, 1]), BoxRegion([5, 5], [6, 6])))
    path = InitialPath([[0.5, 0.5], [2.0, 2.0], [5.5, 5.5]], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="invalid corridor/path"):
        plan(corridor, path)


def test_plan_infeasible_tightening_aborts_before_qp():
    corridor = SafeCorridor(
        (BoxRegion([0.0, 0.0], [0.1, 10.0]), BoxRegion([0.0, 5.0], [0.1, 20.0]))
    )
    path = InitialPath([[0.05, 1.0], [0.05, 7.0], [0.05, 15.0]], [0.0, 1.0, 2.0])
    ambiguity = make_uniform_specs(corridor, NORMAL, 0.25, 0.0, 0.15)
    with pytest.raises(TighteningInfeasibleError, match="region 1"):
        plan(corridor, path, mode="drscc", ambiguity=ambiguity)


def test_plan_infeasible_qp_reports_rows():
    # derivative limit too tight to cover the distance in the allotted time
    corridor = wide_corridor(1)
    path = InitialPath([[0.0, 0.0], [10.0, 0.0]], [0.0, 1.0])
    spec = SnapSpec(derivative_limits={1: (-0.5, 0.5)})
    with pytest.raises(QpInfeasibleError):
        plan(corridor, path, spec)


def test_robust_objective_exceeds_nominal_and_grows_with_radius():
    case = reference_case("elbow")
    nominal = plan(case.corridor, case.path)
    objectives = []
    for radius in (0.05, 0.1):
        ambiguity = make_uniform_specs(case.corridor, NORMAL, 2.0, radius, 0.1)
        result = plan(case.corridor, case.path, mode="drscc", ambiguity=ambiguity)
        objectives.append(result.solution.objective)
        assert result.solution.objective > nominal.solution.objective
    assert objectives[1] >= objectives[0]


def test_objective_monotone_in_risk():
    case = reference_case("elbow")
    values = []
    for risk in (0.25, 0.15, 0.1):
        ambiguity = make_uniform_specs(case.corridor, NORMAL, 2.0, 0.05, risk)
        values.append(plan(case.corridor, case.path, mode="drscc", ambiguity=ambiguity).solution.objective)
    assert values[0] <= values[1] <= values[2]


def test_planned_trajectory_stays_in_boxes():
    case = reference_case("slalom")
    ambiguity = make_uniform_specs(case.corridor, NORMAL, 2.0, 0.05, 0.1)
    result = plan(case.corridor, case.path, mode="drscc", ambiguity=ambiguity)
    exceed = max_box_violation(
        result.trajectory, result.tightened.lowers, result.tightened.uppers, 200
    )
    assert exceed <= 1e-7


def test_plan_is_bitwise_deterministic():
    case = reference_case("elbow")
    a = plan(case.corridor, case.path)
    b = plan(case.corridor, case.path)
    for sa, sb in zip(a.trajectory.segments, b.trajectory.segments):
        assert np.array_equal(sa.control_points, sb.control_points)
    assert a.solution.objective == b.solution.objective


def test_triplet_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    mat = rng.normal(size=(5, 7))
    mat[np.abs(mat) < 0.8] = 0.0
    fname = str(tmp_path / "m.triplet")
    export_triplet(mat, fname)
    back = read_triplet(fname)
    assert np.array_equal(mat, back)
    header = open(fname).readline().split()
    assert [int(header[0]), int(header[1])] == [5, 7]
    assert int(header[2]) == int(np.count_nonzero(mat))


def test_export_problem_files(tmp_path):
    case = reference_case("elbow")
    problem = assemble_constraints(case.corridor, case.path, SnapSpec())
    export_problem(problem, str(tmp_path))
    q_back = read_triplet(str(tmp_path / "objective.triplet"))
    assert np.allclose(q_back, problem.Q)
    a_back = read_triplet(str(tmp_path / "equality.triplet"))
    assert np.allclose(a_back, problem.A_eq)
    bounds = np.loadtxt(str(tmp_path / "variable_bounds.txt"))
    assert np.allclose(bounds[:, 0], problem.lb)
