import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccap.analysis import (Region, bm_equality_probe, bm_sweep, concavity_index,
                              body_concavity_experiment, homothetic_levels_experiment,
                              level_scaling_experiment, level_set_extract, radiality_test,
                              three_levels_experiment)
from fraccap.analysis.brunn_minkowski import (CONSISTENT, NEAR_EQUALITY, SATISFIED, TENSION,
                                              VIOLATED, CapacityValue, classify, deficit,
                                              homogeneity_residuals, ladder, scaled_ladder)
from fraccap.analysis.level_sets import ball_profile, extract_levels, is_nested, three_level_t
from fraccap.geometry import detect_homothety, make_polytope, scale_translate
from fraccap.riesz import DEFAULT_DISCRETIZATION, EquilibriumSolution, KernelSpec, solve_equilibrium

from conftest import SQUARE
from oracles import disk_level_radius

CELLS = ladder(0.05, 3)


def cv(value, bar=0.0):
    return CapacityValue(value, bar, None)


# Brunn-Minkowski bookkeeping

def test_ladder_is_coarsest_first():
    assert ladder(0.05, 3) == pytest.approx((0.1, 0.05 * math.sqrt(2), 0.05))


def test_scaled_ladder_follows_inradius(square):
    big = scale_translate(square, 2.0, [3, 0])
    assert scaled_ladder(big, square, CELLS) == pytest.approx(tuple(2 * h for h in CELLS))


def test_deficit_linear_in_plane():
    d, b = deficit(cv(1.0, 0.01), cv(0.8, 0.02), cv(1.4, 0.03), 0.25, 2)
    assert d == pytest.approx(1.0 - 0.2 - 1.05)
    assert b == pytest.approx(0.01 + 0.25 * 0.02 + 0.75 * 0.03)


def test_deficit_three_dimensional_exponent():
    d, _ = deficit(cv(4.0), cv(1.0), cv(9.0), 0.5, 3)
    assert d == pytest.approx(2.0 - 0.5 - 1.5)


@pytest.mark.parametrize("d, bar, label", [(0.1, 0.01, SATISFIED), (0.005, 0.01, NEAR_EQUALITY),
                                           (-0.01, 0.01, NEAR_EQUALITY), (-0.1, 0.01, VIOLATED)])
def test_classify(d, bar, label):
    assert classify(d, bar) == label


def test_bm_sweep_validation(disk, square):
    for lams in ([], [0.0, 0.5], [0.5, 1.0], [0.6, 0.4]):
        with pytest.raises(ValueError):
            bm_sweep(disk, square, lams, 0.05)
    with pytest.raises(ValueError):
        bm_sweep(disk, square, [0.5])


@pytest.fixture(scope="module")
def disk_square_sweep(disk, square):
    return bm_sweep(disk, square, [0.25, 0.5, 0.75], cells=CELLS)


def test_disk_square_deficits_positive(disk_square_sweep):
    rep = disk_square_sweep
    assert rep.classes == (SATISFIED,) * 3
    assert rep.strictly_positive() == 3
    assert not rep.homothety.is_homothetic()


def test_homothetic_pair_near_equality(square):
    big = scale_translate(square, 2.0, [3.0, 0.0])
    rep = bm_sweep(square, big, [0.3, 0.7], cells=CELLS)
    assert rep.homothety.is_homothetic()
    assert rep.count(NEAR_EQUALITY) == 2
    assert np.all(np.abs(homogeneity_residuals(rep)) < 5e-3)


def test_equality_probe_coarse_cell_is_tension(disk, square):
    p = bm_equality_probe(disk, square, 0.2)
    assert p.classification == TENSION and "refine" in p.advice


def test_equality_probe_consistent_for_non_homothetic(disk, square):
    p = bm_equality_probe(disk, square, 0.05)
    assert p.classification == CONSISTENT and not p.homothetic and p.deficit > p.bar


# concavity index

def inverse_distance(p):
    return 1.0 / np.linalg.norm(p, axis=1)


@pytest.fixture(scope="module")
def annulus():
    return Region(np.zeros(2), 1.0, 5.0)


def test_concavity_closed_form_fields(annulus):
    # |x|^-1 is exactly (-1)-concave on segments avoiding the origin
    rep = concavity_index(inverse_distance, annulus)
    assert rep.alpha == pytest.approx(-1.0, abs=2e-3)
    assert concavity_index(lambda p: np.ones(len(p)), annulus).alpha == 1.0
    gauss = concavity_index(lambda p: np.exp(-np.sum(p * p, axis=1)), annulus)
    assert gauss.alpha >= -1e-3  # log-concave


def test_concavity_below_bracket(annulus):
    rep = concavity_index(inverse_distance, annulus, beta_bracket=(-0.5, 1.0))
    assert rep.below_bracket and rep.alpha == -0.5


def test_concavity_is_reproducible(annulus):
    a = concavity_index(inverse_distance, annulus, seed=7)
    b = concavity_index(inverse_distance, annulus, seed=7)
    assert a.alpha == b.alpha and a.verdicts == b.verdicts


def test_concavity_input_errors(annulus):
    with pytest.raises(ValueError):
        concavity_index(inverse_distance, annulus, beta_bracket=(1.0, 2.0))
    with pytest.raises(ValueError):
        concavity_index(lambda p: -np.ones(len(p)), annulus)
    with pytest.raises(ValueError):
        Region(np.zeros(2), 2.0, 1.0)


def test_region_excludes_body(square):
    reg = Region(np.zeros(2), 0.0, 3.0, square, 0.1)
    pts = reg.sample(np.random.default_rng(0), 2000)
    inside = reg.contains(pts)
    assert not np.any(inside & (np.abs(pts).max(axis=1) < 1.1))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 0.9), st.floats(-3, 0.9))
def test_power_mean_monotone(b1, b2):
    # passing at a larger beta implies passing at a smaller one on a fixed sample
    from fraccap.analysis.concavity import sample_segments
    s = sample_segments(inverse_distance, Region(np.zeros(2), 1.0, 5.0), 300, 0)
    lo, hi = sorted((b1, b2))
    if s.test(hi, 1e-9).passed:
        assert s.test(lo, 1e-9).passed


def test_body_concavity_shell_validation(square):
    with pytest.raises(ValueError):
        body_concavity_experiment(square, 0.1, shell=(1.0, 4.0))


def test_square_potential_alpha_reported(square):
    rep = body_concavity_experiment(square, 0.08, n_segments=1000)
    assert rep.ceiling == -1.0
    assert -8 < rep.alpha < 0 and rep.gap == pytest.approx(rep.alpha + 1)


# level sets

@pytest.fixture(scope="module")
def disk_solution(disk):
    return solve_equilibrium(DEFAULT_DISCRETIZATION.rasterize(disk, 0.04), KernelSpec.fractional(2))


def test_disk_levels_match_closed_form(disk, disk_solution):
    sets = extract_levels(disk_solution, disk, (0.2, 0.4, 0.6))
    for ls in sets:
        R = ls.body.support_values.mean()
        assert R == pytest.approx(disk_level_radius(ls.t), rel=0.01)
        assert ls.convexity > 0.999
    assert is_nested(sets[0], sets[1]) and is_nested(sets[1], sets[2])


def test_level_extract_errors(disk, disk_solution):
    with pytest.raises(ValueError):
        level_set_extract(disk_solution, 0.995, disk.grid)
    with pytest.raises(ValueError):
        level_set_extract(disk_solution, 1.5, disk.grid)


def test_level_scaling_reports_ratios(disk):
    rep = level_scaling_experiment(disk, [0.3], 0.08)
    assert len(rep.ratios) == 1 and rep.ratio_bars[0] > 0
    assert 0 < rep.ratios[0] < 1


def test_homothetic_levels_of_disk(disk):
    rep = homothetic_levels_experiment(disk, 0.3, 0.5, 0.05)
    fit = rep.fits[0]
    assert rep.extra["homothetic"]
    exact = disk_level_radius(0.3) / disk_level_radius(0.5)
    assert fit.rho == pytest.approx(exact, rel=0.01)
    assert rep.extra["relation"] == pytest.approx(0.3 / 0.5 * exact, rel=0.01)
    with pytest.raises(ValueError):
        homothetic_levels_experiment(disk, 0.5, 0.3, 0.05)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.integers(2, 5))
def test_three_level_t_identity_and_bounds(r, lam, n):
    assert three_level_t(r, r, lam, n) == pytest.approx(r, rel=1e-12)
    s = r / 2
    t = three_level_t(r, s, lam, n)
    assert s <= t <= r


def test_three_levels_margin_and_tolerance(disk):
    rep = three_levels_experiment(disk, 0.5, 0.25, 0.5, 0.08)
    assert rep.extra["tolerance"] > 0
    assert len(rep.bodies) == 3
    with pytest.raises(ValueError):
        three_levels_experiment(disk, 0.25, 0.5, 0.5, 0.08)


def test_radiality(disk_solution):
    stats = radiality_test(disk_solution, [0, 0], [2.0, 5.0, 10.0])
    assert stats.max_spread < 0.01
    with pytest.raises(ValueError):
        radiality_test(disk_solution, [0, 0], [0.5])


def test_ball_profile_point_mass():
    sol = EquilibriumSolution.from_charges([[0.0, 0.0]], [1.0], KernelSpec.fractional(2))
    for r, u, ur, law, ratio in ball_profile(sol, [0, 0], 1.0, [2.0, 4.0]):
        assert u == pytest.approx(1 / r) and ratio == pytest.approx(1.0)


def test_detect_homothety_of_translated_square(grid):
    a = make_polytope(SQUARE, grid)
    fit = detect_homothety(a, scale_translate(a, 1.0, [0.5, 0.0]))
    assert fit.rho == pytest.approx(1.0) and fit.is_homothetic()
