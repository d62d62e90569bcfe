import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccap.geometry import (Ball, circle_grid, contains_point, detect_homothety, from_support,
                              is_subset, make_ball, make_polytope, measure_error_bound,
                              minkowski_combine, rasterize, rotate, scale_translate, sphere_grid)

from conftest import SQUARE


def test_direction_grids_are_unit_and_antipodal():
    for g in (circle_grid(), circle_grid(64), sphere_grid(), sphere_grid(100)):
        assert np.allclose(np.linalg.norm(g.directions, axis=1), 1, atol=1e-12)
        assert np.allclose(g.directions[g.antipode], -g.directions, atol=1e-12)
    g = circle_grid()
    angles = np.unwrap(np.arctan2(g.directions[:, 1], g.directions[:, 0]))
    assert np.allclose(np.diff(angles), 2 * math.pi / g.count)
    with pytest.raises(ValueError):
        circle_grid(32)


def test_make_ball_support(grid):
    assert np.allclose(make_ball([0, 0], 1, grid).support_values, 1)
    B = make_ball([1, 0], 2, grid)
    i = np.argmax(grid.directions[:, 0])
    j = np.argmin(grid.directions[:, 0])
    assert B.support_values[i] == pytest.approx(3)
    assert B.support_values[j] == pytest.approx(1)
    with pytest.raises(ValueError):
        make_ball([0, 0], 0, grid)


def test_make_polytope_support(grid, square):
    d = grid.directions
    e1 = np.argmin(np.linalg.norm(d - [1, 0], axis=1))
    diag = np.argmin(np.linalg.norm(d - [math.sqrt(0.5)] * 2, axis=1))
    assert square.support_values[e1] == pytest.approx(1, abs=1e-12)
    assert square.support_values[diag] == pytest.approx(math.sqrt(2), abs=1e-12)
    assert np.allclose(square.support_values, np.max(d @ np.array(SQUARE, float).T, axis=1), atol=1e-12)
    tri = make_polytope([[0, 0], [1, 0], [0, 1]], grid)
    down = np.argmin(np.linalg.norm(d - [0, -1], axis=1))
    assert tri.support_values[down] == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        make_polytope([[0, 0], [1, 0]], grid)
    with pytest.raises(ValueError):
        make_polytope([[0, 0], [1, 0], [2, 0]], grid)


def test_minkowski_combine_examples(grid, disk, square):
    B = minkowski_combine(0.5, disk, make_ball([0, 0], 3, grid))
    assert isinstance(B.descriptor, Ball) and B.descriptor.radius == pytest.approx(2)
    assert np.allclose(B.support_values, 2)
    assert minkowski_combine(1.0, square, disk) is square
    assert minkowski_combine(0.0, square, disk) is disk
    M = minkowski_combine(0.5, square, disk)
    d = grid.directions
    diag = np.argmin(np.linalg.norm(d - [math.sqrt(0.5)] * 2, axis=1))
    assert M.support_values[diag] == pytest.approx((math.sqrt(2) + 1) / 2)
    assert M.descriptor is None
    with pytest.raises(ValueError):
        minkowski_combine(1.5, square, disk)
    with pytest.raises(ValueError):
        minkowski_combine(0.5, square, make_ball([0, 0], 1, circle_grid(64)))


def test_scale_translate_examples(grid, disk, square):
    assert np.allclose(scale_translate(disk, 2, [0, 0]).support_values, 2)
    assert scale_translate(square, 1, [0, 0]) is square
    T = scale_translate(square, 1, [5, 0])
    e1 = np.argmin(np.linalg.norm(grid.directions - [1, 0], axis=1))
    assert T.support_values[e1] == pytest.approx(6)
    assert contains_point(T, [5.9, 0.9]) and not contains_point(T, [3.9, 0.0])
    with pytest.raises(ValueError):
        scale_translate(square, 0, [0, 0])


def test_contains_and_subset(grid, disk, square):
    assert contains_point(disk, [0, 0])
    assert not contains_point(disk, [2, 0])
    assert not contains_point(square, [1.0001, 0])
    big = make_ball([0, 0], 2, grid)
    assert is_subset(disk, big)
    assert not is_subset(big, disk)
    assert not is_subset(make_ball([3, 0], 1, grid), big)


def test_detect_homothety_examples(grid, disk, square):
    fit = detect_homothety(disk, make_ball([1, 0], 2, grid))
    assert fit.rho == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(fit.xi, [-0.5, 0], atol=1e-12)
    assert fit.residual < 1e-12
    fit = detect_homothety(square, square)
    assert fit.rho == pytest.approx(1) and fit.residual < 1e-12


def test_rotated_square_is_not_homothetic():
    # oracle: analytic support functions on a 64-direction grid
    g = circle_grid(64)
    t = np.arctan2(g.directions[:, 1], g.directions[:, 0])
    h_sq = np.abs(np.cos(t)) + np.abs(np.sin(t))
    h_rot = math.sqrt(2) * np.maximum(np.abs(np.cos(t)), np.abs(np.sin(t)))
    A = np.column_stack([h_rot, g.directions])
    coef, *_ = np.linalg.lstsq(A, h_sq, rcond=None)
    expected = np.sqrt(np.mean((h_sq - A @ coef) ** 2))
    S = make_polytope(SQUARE, g)
    fit = detect_homothety(S, rotate(S, math.pi / 4))
    assert fit.residual == pytest.approx(expected, rel=1e-9)
    assert fit.residual > 0.1
    assert not fit.is_homothetic()


def test_rasterize_examples(disk, square):
    q = rasterize(disk, 0.05)
    assert q.measure() == pytest.approx(math.pi, rel=5e-3)
    assert np.all(q.weights > 0)
    assert np.all(disk.contains(q.nodes))
    q = rasterize(square, 0.1, occupancy=True)
    assert q.measure() == pytest.approx(4, abs=1e-9)
    assert np.all(square.contains(q.nodes))
    with pytest.raises(ValueError):
        rasterize(disk, 0.6)


def test_rasterize_is_deterministic_and_ordered(square):
    a = rasterize(square, 0.07, occupancy=True, angle=0.3)
    b = rasterize(square, 0.07, occupancy=True, angle=0.3)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)


@pytest.mark.parametrize("body", ["disk", "square"])
def test_rasterize_mass_converges_first_order(body, request):
    K = request.getfixturevalue(body)
    exact = math.pi if body == "disk" else 4.0
    for h in (0.08, 0.04, 0.02):
        err = abs(rasterize(K, h).measure() - exact) / exact
        assert err <= measure_error_bound(K, h)
        err = abs(rasterize(K, h, occupancy=True, angle=0.3).measure() - exact) / exact
        assert err <= measure_error_bound(K, h)


def test_sphere_ball_rasterizes():
    g = sphere_grid()
    B = make_ball([0, 0, 0], 1, g)
    q = rasterize(B, 0.1)
    assert q.measure() == pytest.approx(4 / 3 * math.pi, rel=0.02)


# ------------------------------------------------------------- properties

lams = st.floats(0, 1)
rhos = st.floats(0.1, 10)
coords = st.floats(-10, 10)


def _random_body(seed, grid):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(12, 2)) * rng.uniform(0.5, 3, size=2)
    return make_polytope(pts, grid)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), lams)
def test_support_linearity(s1, s2, lam):
    g = circle_grid()
    K1, K2 = _random_body(s1, g), _random_body(s2, g)
    M = minkowski_combine(lam, K1, K2)
    assert np.array_equal(M.support_values, lam * K1.support_values + (1 - lam) * K2.support_values) \
        or lam in (0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), rhos, coords, coords)
def test_homothety_round_trip(seed, rho, x, y):
    g = circle_grid()
    K = _random_body(seed, g)
    fit = detect_homothety(scale_translate(K, rho, [x, y]), K)
    assert fit.residual < 1e-10
    assert fit.rho == pytest.approx(rho, rel=1e-10)
    assert np.allclose(fit.xi, [x, y], atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(lams, coords, coords, st.floats(0.1, 5), coords, coords, st.floats(0.1, 5))
def test_combination_of_balls_is_ball(lam, x1, y1, r1, x2, y2, r2):
    g = circle_grid()
    B = minkowski_combine(lam, make_ball([x1, y1], r1, g), make_ball([x2, y2], r2, g))
    c = lam * np.array([x1, y1]) + (1 - lam) * np.array([x2, y2])
    expected = make_ball(c, lam * r1 + (1 - lam) * r2, g)
    assert np.allclose(B.support_values, expected.support_values, atol=1e-12)
    assert isinstance(B.descriptor, Ball)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_subset_is_partial_order(s1, s2, s3):
    g = circle_grid()
    A = _random_body(s1, g)
    B = minkowski_combine(0.5, A, _random_body(s2, g))
    assert is_subset(A, A)
    big = from_support(np.maximum(A.support_values, B.support_values) + 0.1, g)
    bigger = from_support(big.support_values + abs(s3 % 7) * 0.1, g)
    assert is_subset(A, big) and is_subset(big, bigger) and is_subset(A, bigger)
    if is_subset(A, B) and is_subset(B, A):
        assert np.allclose(A.support_values, B.support_values, atol=1e-12)
