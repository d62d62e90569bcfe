"""Super-level sets {u >= t} of computed capacitary potentials.

Sets are read off in two ways.  A probe lattice gives the raw point cloud
used for nesting and for the convexity score.  Bisection of u = t along the
rays of the body's direction grid gives accurate boundary points whose hull
becomes the ConvexBody used for homothety fits and capacities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, Delaunay

from ..geometry import (ConvexBody, DirectionGrid, detect_homothety, make_polytope,
                        minkowski_combine)
from ..riesz import (DEFAULT_DISCRETIZATION, Discretization, EquilibriumSolution, KernelSpec,
                     eval_potential, solve_equilibrium, unit_directions)
from .brunn_minkowski import CapacityValue, capacity_value, ladder

log = logging.getLogger(__name__)

PROBE_POINTS = 201  # per axis


@dataclass(frozen=True, eq=False)
class ProbeField:
    center: np.ndarray
    half_width: float
    spacing: float
    shape: tuple
    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def mask(self, t: float) -> np.ndarray:
        return (self.values >= t).reshape(self.shape)


def probe_field(sol: EquilibriumSolution, center, half_width: float,
                points_per_axis: int = PROBE_POINTS) -> ProbeField:
    c = np.asarray(center, float)
    x = np.linspace(-half_width, half_width, points_per_axis)
    grids = np.meshgrid(*([x] * len(c)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1) + c
    vals = eval_potential(sol, pts)
    return ProbeField(c, float(half_width), float(x[1] - x[0]), grids[0].shape, pts, vals)


def level_bound(sol: EquilibriumSolution, center, t: float) -> float:
    """Radius about ``center`` containing {u >= t}.

    u(x) <= cap / dist(x, supp mu), so the level set lies within cap/t of
    the nodes (a few cells of slack cover negative charges).
    """
    extent = float(np.linalg.norm(sol.nodes - np.asarray(center), axis=1).max())
    mass = float(np.abs(sol.charges).sum())
    return extent + (mass / t) ** (1.0 / sol.spec.exponent) + 2 * sol.quadrature.cell_size


@dataclass(frozen=True, eq=False)
class LevelSet:
    t: float
    body: ConvexBody
    convexity: float
    mask: np.ndarray = field(repr=False)
    probe: ProbeField = field(repr=False)


def _check_level(sol: EquilibriumSolution, t: float):
    if not 0 < t < 1:
        raise ValueError(f"level t must lie in (0, 1), got {t}")
    # stay clear of the boundary layer, where u dips below 1 between nodes
    floor = 1.0 - 10 * max(sol.residual_max, 1e-3)
    if t >= floor:
        raise ValueError(f"level t={t} is inside the boundary layer (must be < {floor:.3f})")


def convexity_score(probe: ProbeField, mask: np.ndarray) -> float:
    """Fraction of probe points inside the hull of {u >= t} that satisfy u >= t."""
    flat = mask.ravel()
    pts = probe.points[flat]
    hull = ConvexHull(pts)
    inside = Delaunay(pts[hull.vertices]).find_simplex(probe.points) >= 0
    return float(flat[inside].sum() / inside.sum())


def ray_boundary(sol: EquilibriumSolution, center, directions, t: float, r_max: float,
                 iterations: int = 52) -> np.ndarray:
    """Radii where u = t along rays from ``center`` (vectorized bisection)."""
    c = np.asarray(center, float)
    lo = np.zeros(len(directions))
    hi = np.full(len(directions), r_max)
    if np.any(eval_potential(sol, c + r_max * directions) >= t):
        raise ValueError("level set reaches the search radius")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = eval_potential(sol, c + mid[:, None] * directions) >= t
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def level_set_extract(sol: EquilibriumSolution, t: float, grid: DirectionGrid, *,
                      center=None, probe: ProbeField | None = None) -> LevelSet:
    """Omega(t) as the hull of ray-bisected boundary points, plus its score."""
    _check_level(sol, t)
    c = sol.charge_center() if center is None else np.asarray(center, float)
    bound = level_bound(sol, c, t)
    if probe is None:
        probe = probe_field(sol, c, 1.05 * bound)
    mask = probe.mask(t)
    edge = np.zeros_like(mask)
    for d in range(mask.ndim):
        sl = [slice(None)] * mask.ndim
        for end in (0, -1):
            sl[d] = end
            edge[tuple(sl)] = True
    if np.any(mask & edge):
        raise ValueError(f"level set u >= {t} reaches the probe-lattice boundary")
    if mask.sum() < mask.ndim + 1:
        raise ValueError(f"probe lattice too coarse for level {t}")
    score = convexity_score(probe, mask)
    rho = ray_boundary(sol, c, grid.directions, t, bound)
    body = make_polytope(c + rho[:, None] * grid.directions, grid)
    return LevelSet(float(t), body, score, mask, probe)


def is_nested(outer: LevelSet, inner: LevelSet) -> bool:
    """Probe-wise inclusion {u >= t_inner} within {u >= t_outer}."""
    return bool(np.all(outer.mask | ~inner.mask))


@dataclass(frozen=True)
class LevelSetReport:
    levels: tuple
    bodies: tuple = field(repr=False)
    convexity: tuple
    fits: tuple = ()
    capacity: CapacityValue | None = None
    level_capacities: tuple = ()
    ratios: tuple = ()
    ratio_bars: tuple = ()
    extra: dict = field(default_factory=dict)


def _solve(K: ConvexBody, cell_size: float, disc: Discretization) -> EquilibriumSolution:
    return solve_equilibrium(disc.rasterize(K, cell_size), KernelSpec.fractional(K.dim))


def extract_levels(sol: EquilibriumSolution, K: ConvexBody, levels) -> list[LevelSet]:
    """Level sets of K's potential on one shared probe lattice."""
    c = K.center()
    probe = probe_field(sol, c, 1.05 * level_bound(sol, c, min(levels)))
    return [level_set_extract(sol, t, K.grid, center=c, probe=probe) for t in levels]


def level_scaling_experiment(K: ConvexBody, t_list, cell_size: float, *,
                             levels: int = 3,
                             disc: Discretization = DEFAULT_DISCRETIZATION) -> LevelSetReport:
    """Ratio cap*(Omega(t)) t / cap*(Omega) for each t; reported, not judged.

    Capacities come from refinement ladders; the level bodies use the base
    ladder scaled by their circumradius ratio.
    """
    ts = tuple(float(t) for t in t_list)
    if any(not 0 < t <= 0.6 for t in ts):
        raise ValueError(f"levels must lie in (0, 0.6], got {ts}")
    cells = ladder(cell_size, levels)
    base = capacity_value(K, cells, disc=disc)
    sets = extract_levels(_solve(K, cell_size, disc), K, ts)
    caps, ratios, bars = [], [], []
    R0 = K.circumradius()
    for t, ls in zip(ts, sets):
        s = ls.body.circumradius() / R0
        cv = capacity_value(ls.body, [h * s for h in cells], disc=disc)
        ratio = cv.value * t / base.value
        caps.append(cv)
        ratios.append(ratio)
        bars.append(ratio * (cv.bar / cv.value + base.bar / base.value))
        log.info("t=%.3f: cap %.6f ratio %.5f +- %.1e", t, cv.value, ratio, bars[-1])
    return LevelSetReport(ts, tuple(ls.body for ls in sets), tuple(ls.convexity for ls in sets),
                          capacity=base, level_capacities=tuple(caps), ratios=tuple(ratios),
                          ratio_bars=tuple(bars))


def ball_fit(K: ConvexBody, center) -> tuple[float, float]:
    """(radius, relative RMS misfit) of K against a ball about ``center``."""
    c = np.asarray(center, float)
    h = K.support_values - K.grid.directions @ c
    R = float(h.mean())
    return R, float(np.sqrt(np.mean((h - R) ** 2)) / R)


def homothetic_levels_experiment(K: ConvexBody, r: float, s: float, cell_size: float, *,
                                 disc: Discretization = DEFAULT_DISCRETIZATION) -> LevelSetReport:
    """Fit Omega(r) = rho Omega(s) + xi and evaluate (r/s) rho^{n-1}."""
    if not 0 < r < s <= 0.6:
        raise ValueError(f"need 0 < r < s <= 0.6, got r={r}, s={s}")
    sol = _solve(K, cell_size, disc)
    Lr, Ls = extract_levels(sol, K, (r, s))
    fit = detect_homothety(Lr.body, Ls.body)
    n = K.dim
    relation = (r / s) * fit.rho ** (n - 1)
    extra = {"relation": relation, "relative_residual": fit.residual / fit.scale,
             "homothetic": fit.is_homothetic()}
    if abs(1 - fit.rho) > 1e-12:
        center = fit.xi / (1 - fit.rho)
        radius, misfit = ball_fit(Ls.body, center)
        extra.update(ball_center=center.tolist(), ball_radius=radius, ball_misfit=misfit)
    return LevelSetReport((r, s), (Lr.body, Ls.body), (Lr.convexity, Ls.convexity), (fit,),
                          extra=extra)


def three_level_t(r: float, s: float, lam: float, n: int) -> float:
    """t with t^{1/(1-n)} = (1 - lam) r^{1/(1-n)} + lam s^{1/(1-n)}."""
    e = 1.0 / (1 - n)
    return ((1 - lam) * r ** e + lam * s ** e) ** (1.0 / e)


def three_levels_experiment(K: ConvexBody, r: float, s: float, lam: float, cell_size: float, *,
                            disc: Discretization = DEFAULT_DISCRETIZATION) -> LevelSetReport:
    """Inclusion margin min_theta h_Omega(t) - h_{(1-lam)Omega(r) + lam Omega(s)}.

    The tolerance is an extraction-error estimate: the same margin and
    support functions recomputed at cell_size * sqrt(2), taking the largest
    change.
    """
    if not 0 < s < r <= 0.6:
        raise ValueError(f"need 0 < s < r <= 0.6, got r={r}, s={s}")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    t = three_level_t(r, s, lam, K.dim)

    def margins(h):
        Lr, Ls, Lt = extract_levels(_solve(K, h, disc), K, (r, s, t))
        comb = minkowski_combine(1 - lam, Lr.body, Ls.body)
        gap = Lt.body.support_values - comb.support_values
        return gap, (Lr, Ls, Lt)

    gap, sets = margins(cell_size)
    gap_c, sets_c = margins(cell_size * math.sqrt(2))
    change = max(float(np.abs(a.body.support_values - b.body.support_values).max())
                 for a, b in zip(sets, sets_c))
    tol = max(change, float(np.abs(gap - gap_c).max()))
    k = int(np.argmin(gap))
    extra = {"t": t, "lambda": lam, "margin": float(gap[k]), "tolerance": tol,
             "worst_direction": K.grid.directions[k].tolist()}
    return LevelSetReport((r, s, t), tuple(ls.body for ls in sets),
                          tuple(ls.convexity for ls in sets), extra=extra)


@dataclass(frozen=True)
class RadialityStats:
    radii: tuple
    spreads: tuple
    max_spread: float


def radiality_test(sol: EquilibriumSolution, center, radii, n_dirs: int = 64) -> RadialityStats:
    """Relative spread (max - min) / mean of u over circles or spheres."""
    c = np.asarray(center, float)
    extent = float(np.linalg.norm(sol.nodes - c, axis=1).max())
    dirs = unit_directions(sol.spec.dim, n_dirs)
    spreads = []
    for R in radii:
        if R <= extent:
            raise ValueError(f"radius {R} is inside the body (extent {extent:.4g})")
        u = eval_potential(sol, c + R * dirs)
        spreads.append(float((u.max() - u.min()) / u.mean()))
    return RadialityStats(tuple(map(float, radii)), tuple(spreads), max(spreads))


def ball_profile(sol: EquilibriumSolution, center, radius: float, radii, n_dirs: int = 64):
    """Direction-averaged u against the power law (R/|x|)^{n-1}.

    Returns rows (|x|, u, u |x|^{n-1}, power law, u / power law).
    """
    c = np.asarray(center, float)
    n = sol.spec.dim
    dirs = unit_directions(n, n_dirs)
    rows = []
    for r in radii:
        u = float(eval_potential(sol, c + r * dirs).mean())
        law = (radius / r) ** (n - 1)
        rows.append((float(r), u, u * r ** (n - 1), law, u / law))
    return rows

