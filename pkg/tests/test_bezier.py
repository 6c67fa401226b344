"""Bernstein basis, segment evaluation and derivative control points."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drcorridor.bezier import (
    BezierSegment,
    PiecewiseBezier,
    basis,
    binomial_coefficients,
    derivative_control_points,
    evaluate,
    evaluate_at,
    evaluate_derivative,
    sample,
)
from oracles import de_casteljau


def test_binomials_exact():
    assert binomial_coefficients(5).tolist() == [1, 5, 10, 10, 5, 1]
    assert binomial_coefficients(30)[15] == 155117520
    with pytest.raises(ValueError):
        binomial_coefficients(31)


def test_basis_endpoints():
    assert basis(3, 0, 0.0) == 1.0
    assert basis(3, 3, 1.0) == 1.0
    assert basis(3, 1, 0.0) == 0.0


def test_basis_partition_of_unity():
    total = sum(basis(5, j, 0.37) for j in range(6))
    assert abs(total - 1.0) < 1e-12


def test_basis_rejects_bad_arguments():
    with pytest.raises(ValueError, match="basis index"):
        basis(3, 4, 0.5)
    with pytest.raises(ValueError, match="normalized time"):
        basis(3, 1, 1.5)


def test_evaluate_constant_curve():
    seg = BezierSegment(np.tile([2.0, -1.0], (5, 1)), duration=1.0)
    for t in (0.0, 0.3, 0.77, 1.0):
        assert np.allclose(evaluate(seg, t), [2.0, -1.0], atol=1e-14)


def test_evaluate_linear_midpoint():
    seg = BezierSegment([[0.0], [2.0]], duration=1.0)
    assert np.isclose(evaluate(seg, 0.5)[0], 1.0)


def test_evaluate_matches_de_casteljau():
    rng = np.random.default_rng(7)
    cps = rng.uniform(-5, 5, (4, 2))
    seg = BezierSegment(cps, duration=1.3)
    for t in (0.3, 0.05, 0.92):
        assert np.allclose(evaluate(seg, t), de_casteljau(cps, t), atol=1e-12)


def test_evaluate_rejects_time_outside_unit_interval():
    seg = BezierSegment([[0.0], [1.0]], duration=1.0)
    with pytest.raises(ValueError):
        evaluate(seg, -0.1)


def test_derivative_order_zero_is_identity():
    cps = np.array([[0.0], [1.0], [4.0]])
    seg = BezierSegment(cps, duration=2.0)
    assert np.array_equal(derivative_control_points(seg, 0), cps)


def test_first_derivative_control_points():
    # differentiate 2t + 2t^2 symbolically: B'(t) = 2 + 4t -> Bernstein (2, 6)
    seg = BezierSegment([[0.0], [1.0], [4.0]], duration=1.0)
    assert np.allclose(derivative_control_points(seg, 1), [[2.0], [6.0]])


def test_derivative_of_constant_is_zero():
    seg = BezierSegment(np.tile([3.0], (6, 1)), duration=1.0)
    assert np.allclose(derivative_control_points(seg, 1), 0.0)


def test_derivative_order_beyond_degree_errors():
    seg = BezierSegment([[0.0], [1.0], [4.0]], duration=1.0)
    with pytest.raises(ValueError):
        derivative_control_points(seg, 3)


def test_physical_scaling_flag():
    seg = BezierSegment([[0.0], [1.0], [4.0]], duration=2.0)
    a_norm = derivative_control_points(seg, 1)
    a_phys = derivative_control_points(seg, 1, physical=True)
    assert np.allclose(a_phys, a_norm / 2.0)


def test_sample_resolution_two_gives_endpoints():
    seg = BezierSegment([[0.0, 0.0], [1.0, 2.0]], duration=3.0)
    traj = PiecewiseBezier((seg,), start_time=1.0)
    times, pts = sample(traj, 2)
    assert np.allclose(times, [1.0, 4.0])
    assert np.allclose(pts, [[0.0, 0.0], [1.0, 2.0]])


def test_sample_timestamps_duplicate_junctions():
    segs = (
        BezierSegment([[0.0], [1.0]], duration=1.0),
        BezierSegment([[1.0], [2.0]], duration=1.0),
    )
    times, _ = sample(PiecewiseBezier(segs), 3)
    assert np.allclose(times, [0.0, 0.5, 1.0, 1.0, 1.5, 2.0])


def test_sample_constant_trajectory():
    segs = tuple(BezierSegment(np.tile([5.0, 5.0], (3, 1)), duration=1.0) for _ in range(2))
    _, pts = sample(PiecewiseBezier(segs), 4)
    assert np.allclose(pts, 5.0)


def test_sample_rejects_low_resolution():
    traj = PiecewiseBezier((BezierSegment([[0.0], [1.0]], duration=1.0),))
    with pytest.raises(ValueError):
        sample(traj, 1)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.floats(-10, 10), min_size=2, max_size=9),
    st.floats(0.0, 1.0),
)
def test_convex_hull_property(values, t):
    cps = np.array(values)[:, None]
    seg = BezierSegment(cps, duration=1.0)
    val = evaluate(seg, t)[0]
    assert cps.min() - 1e-9 <= val <= cps.max() + 1e-9


def test_finite_difference_derivative_consistency():
    # central difference of evaluate vs the derivative control points,
    # in physical time, at 100 random (segment, t) pairs
    rng = np.random.default_rng(42)
    h = 1e-6
    for _ in range(100):
        n = int(rng.integers(2, 9))
        cps = rng.uniform(-5, 5, (n + 1, 2))
        tau = rng.uniform(0.2, 3.0)
        seg = BezierSegment(cps, duration=tau)
        t = rng.uniform(2 * h, 1.0 - 2 * h)
        fd = (evaluate(seg, t + h) - evaluate(seg, t - h)) / (2 * h * tau)
        exact = evaluate_derivative(seg, t, 1)
        scale = max(1.0, float(np.abs(exact).max()))
        assert np.abs(fd - exact).max() / scale < 1e-6


def test_endpoint_interpolation_exact():
    rng = np.random.default_rng(3)
    cps = rng.uniform(-4, 4, (8, 3))
    seg = BezierSegment(cps, duration=0.7)
    assert np.array_equal(evaluate(seg, 0.0), cps[0])
    assert np.array_equal(evaluate(seg, 1.0), cps[-1])


def test_evaluate_at_absolute_times():
    segs = (
        BezierSegment([[0.0], [1.0]], duration=2.0),
        BezierSegment([[1.0], [3.0]], duration=1.0),
    )
    traj = PiecewiseBezier(segs, start_time=10.0)
    assert np.isclose(evaluate_at(traj, 10.0)[0], 0.0)
    assert np.isclose(evaluate_at(traj, 11.0)[0], 0.5)
    assert np.isclose(evaluate_at(traj, 13.0)[0], 3.0)
    # first derivative of the second piece: slope 2 over duration 1
    assert np.isclose(evaluate_at(traj, 12.5, order=1)[0], 2.0)
    with pytest.raises(ValueError, match="horizon"):
        evaluate_at(traj, 14.0)


def test_piecewise_requires_consistent_segments():
    with pytest.raises(ValueError, match="degree/dimension"):
        PiecewiseBezier(
            (
                BezierSegment([[0.0], [1.0]], duration=1.0),
                BezierSegment([[0.0], [1.0], [2.0]], duration=1.0),
            )
        )
