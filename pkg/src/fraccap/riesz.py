"""Riesz equilibrium measures on discretized convex bodies.

For a kernel k(x, y) = |x - y|^{-s} the equilibrium measure mu of a compact
set K has potential identically 1 on K.  Its total mass is the capacity in
the limit normalization cap*(K) = lim u(x) |x|^s, which for s = n - 1 in R^n
is the 1/2-fractional capacity.  The same code handles the Newtonian kernel
(s = m - 2 in R^m), used by the extension oracle in R^3.

The discrete problem is collocation at quadrature nodes with piecewise
constant density: G q = 1, where q_j = w_j mu_j and G_ij = |x_i - x_j|^{-s}
off the diagonal.  The diagonal is the kernel integral over the ball of the
same measure as the cell, divided by that measure.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.spatial.distance import cdist
from scipy.special import gamma

from .geometry import ConvexBody, Quadrature, rasterize, sphere_grid

log = logging.getLogger(__name__)

MAX_NODES = 20000
CG_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """CG failed to reach the requested residual."""


@dataclass(frozen=True)
class KernelSpec:
    exponent: float
    dim: int

    def __post_init__(self):
        if not 0 < self.exponent < self.dim:
            raise ValueError(f"kernel exponent must satisfy 0 < s < {self.dim}, got {self.exponent}")

    @classmethod
    def fractional(cls, n: int) -> "KernelSpec":
        return cls(float(n - 1), n)

    @classmethod
    def newtonian(cls, m: int) -> "KernelSpec":
        return cls(float(m - 2), m)

    def self_term(self, weights) -> np.ndarray:
        """Mean of |y|^{-s} over the ball of measure w, centered at 0."""
        m, s = self.dim, self.exponent
        w = np.asarray(weights, float)
        omega = math.pi ** (m / 2) / gamma(m / 2 + 1)
        sigma = m * omega
        a = (w / omega) ** (1.0 / m)
        return sigma * a ** (m - s) / (m - s) / w


@dataclass(frozen=True)
class Discretization:
    """Rasterization settings used by the capacity pipeline.

    A lattice rotated by a generic angle keeps straight edges from lining up
    with cell faces, and occupancy weighting with centroid nodes places the
    outermost nodes close to the boundary where the density concentrates.
    Both remove most of the alignment jitter of the plain center-in lattice.
    The remaining jitter is averaged out over a few lattice offsets.
    """

    occupancy: bool = True
    subsamples: int = 8
    angle: float = 0.3
    offsets: int = 4

    def lattice_offsets(self, dim: int) -> list[np.ndarray]:
        # R_d low-discrepancy sequence started at the cell center
        g = {2: 1.32471795724474602596, 3: 1.22074408460575947536}[dim]
        a = g ** -np.arange(1, dim + 1)
        return [np.mod(0.5 + k * a, 1.0) for k in range(self.offsets)]

    def rasterize(self, K: ConvexBody, cell_size: float, offset=0.5) -> Quadrature:
        return rasterize(K, cell_size, occupancy=self.occupancy,
                         subsamples=self.subsamples, angle=self.angle, offset=offset)


DEFAULT_DISCRETIZATION = Discretization()


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    quadrature: Quadrature
    spec: KernelSpec
    charges: np.ndarray  # q_j = w_j * mu_j
    self_terms: np.ndarray = field(repr=False)
    residual_max: float = 0.0
    residual_rms: float = 0.0
    iterations: int = 0

    @property
    def nodes(self) -> np.ndarray:
        return self.quadrature.nodes

    @property
    def density(self) -> np.ndarray:
        return self.charges / self.quadrature.weights

    @property
    def capacity_mass(self) -> float:
        return float(self.charges.sum())

    @property
    def negative_count(self) -> int:
        return int((self.charges < 0).sum())

    @property
    def negative_min(self) -> float:
        return float(min(0.0, self.density.min()))

    def charge_center(self) -> np.ndarray:
        return (self.charges[:, None] * self.nodes).sum(axis=0) / self.charges.sum()

    @classmethod
    def from_charges(cls, nodes, charges, spec: KernelSpec) -> "EquilibriumSolution":
        """Synthetic field of point charges (unit cell weights)."""
        nodes = np.atleast_2d(np.asarray(nodes, float))
        w = np.ones(len(nodes))
        q = Quadrature(nodes.shape[1], nodes, w, 1.0)
        return cls(q, spec, np.asarray(charges, float), spec.self_term(w))


@dataclass(frozen=True)
class AsymptoticFit:
    value: float
    slope: float
    radii: np.ndarray
    values: np.ndarray
    center: np.ndarray

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class CapacityEstimate:
    mass_estimate: float
    asymptotic_estimate: float
    discrepancy: float
    resolution: float
    nodes: int
    extrapolated: float | None = None
    solution: EquilibriumSolution | None = field(default=None, repr=False, compare=False)


# ------------------------------------------------------------------ assembly


def assemble_kernel(q: Quadrature, spec: KernelSpec, max_nodes: int = MAX_NODES) -> np.ndarray:
    if spec.dim != q.dim:
        raise ValueError(f"kernel dimension {spec.dim} does not match quadrature dimension {q.dim}")
    if q.size > max_nodes:
        raise ValueError(f"{q.size} nodes exceed the dense-matrix cap of {max_nodes}")
    G = cdist(q.nodes, q.nodes)
    np.fill_diagonal(G, 1.0)
    if np.any(G == 0):
        raise ValueError("coincident quadrature nodes")
    if spec.exponent == 1.0:
        np.reciprocal(G, out=G)
    else:
        np.power(G, -spec.exponent, out=G)
    np.fill_diagonal(G, spec.self_term(q.weights))
    if not np.all(np.isfinite(G)):
        raise ValueError("non-finite kernel entries")
    return G


def pcg(A: np.ndarray, b: np.ndarray, tol: float = CG_TOL, maxiter: int | None = None):
    """Jacobi-preconditioned CG; stops on ||r||_inf <= tol * ||b||_inf.

    Returns (x, iterations, residual_inf).  Reductions are plain numpy dot
    products on a fixed layout, so repeated runs give identical bits.
    """
    n = len(b)
    if maxiter is None:
        maxiter = 20 * int(math.ceil(math.sqrt(n))) + 20
    dinv = 1.0 / np.diag(A)
    x = np.zeros(n)
    r = b.astype(float).copy()
    bnorm = np.abs(b).max()
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise ConvergenceError(f"non-positive curvature p'Ap={pAp:.3e} at iteration {k}; "
                                   "matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.abs(r).max()
        if res <= tol * bnorm:
            return x, k, float(res)
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    d = np.diag(A)
    raise ConvergenceError(f"CG did not converge in {maxiter} iterations (residual {res:.3e}, "
                           f"diagonal ratio {d.max() / d.min():.3e})")


def solve_equilibrium(q: Quadrature, spec: KernelSpec, *, tol: float = CG_TOL,
                      maxiter: int | None = None, nonnegative: bool = False,
                      max_nodes: int = MAX_NODES) -> EquilibriumSolution:
    G = assemble_kernel(q, spec, max_nodes)
    ones = np.ones(q.size)
    if nonnegative:
        # energy minimization 1/2 q'Gq - sum(q) over q >= 0
        res = minimize(lambda c: (0.5 * c @ (G @ c) - c.sum(), G @ c - 1.0),
                       np.full(q.size, 1.0 / G.sum(axis=1).mean()), jac=True,
                       method="L-BFGS-B", bounds=[(0, None)] * q.size,
                       options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12})
        charges, iters = res.x, int(res.nit)
        support = charges > 0
        r = (G @ charges - ones)[support]
    else:
        charges, iters, _ = pcg(G, ones, tol, maxiter)
        r = G @ charges - ones
    self_terms = np.diag(G).copy()
    del G
    return EquilibriumSolution(q, spec, charges, self_terms, float(np.abs(r).max()),
                               float(np.sqrt(np.mean(r * r))), iters)


def dense_solve(q: Quadrature, spec: KernelSpec) -> np.ndarray:
    """Direct LU solve of the same system (small-instance oracle)."""
    G = assemble_kernel(q, spec)
    return np.linalg.solve(G, np.ones(q.size))


# ----------------------------------------------------------------- potentials


def eval_potential(sol: EquilibriumSolution, points, chunk: int = 2048) -> np.ndarray:
    """u(x) = sum_j q_j |x - x_j|^{-s}; node-coincident points use the self term."""
    x = np.atleast_2d(np.asarray(points, float))
    s = sol.spec.exponent
    out = np.empty(len(x))
    scale = sol.quadrature.cell_size
    for i in range(0, len(x), chunk):
        D = cdist(x[i:i + chunk], sol.nodes)
        hit = D <= 1e-12 * scale
        D[hit] = 1.0
        K = 1.0 / D if s == 1.0 else D ** -s
        if hit.any():
            rows, cols = np.nonzero(hit)
            K[rows, cols] = sol.self_terms[cols]
        out[i:i + chunk] = K @ sol.charges
    return out


def unit_directions(dim: int, count: int) -> np.ndarray:
    if dim == 2:
        t = 2 * math.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    return sphere_grid(count + count % 2).directions[:count]


def capacity_asymptotic(sol: EquilibriumSolution, radii=None, n_dirs: int = 64,
                        center=None) -> AsymptoticFit:
    """Fit the shell averages of u(x)|x - c|^s by a + b/R + c/R^2 and return a.

    About the charge centroid the dipole term cancels, so the leading
    correction is O(1/R^2); the quadratic term absorbs it.
    """
    c = sol.charge_center() if center is None else np.asarray(center, float)
    extent = float(np.linalg.norm(sol.nodes - c, axis=1).max()) + sol.quadrature.cell_size
    if radii is None:
        radii = extent * np.array([4.0, 8.0, 16.0, 32.0, 64.0, 128.0])
    radii = np.asarray(radii, float)
    if len(radii) < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("need at least 3 strictly increasing radii")
    if radii[0] < 3 * extent:
        raise ValueError(f"smallest radius {radii[0]:.4g} is closer than 3x the body extent {extent:.4g}")
    dirs = unit_directions(sol.spec.dim, n_dirs)
    s = sol.spec.exponent
    vals = np.array([eval_potential(sol, c + R * dirs).mean() * R ** s for R in radii])
    _, b, a = np.polyfit(1.0 / radii, vals, 2)
    return AsymptoticFit(float(a), float(b), radii, vals, c)


# ------------------------------------------------------------------ pipeline


def capacity(K: ConvexBody, cell_size: float, spec: KernelSpec | None = None,
             disc: Discretization = DEFAULT_DISCRETIZATION, *, keep_solution: bool = False,
             **solve_kw) -> CapacityEstimate:
    spec = spec or KernelSpec.fractional(K.dim)
    masses, asyms, sizes, first = [], [], [], None
    for off in disc.lattice_offsets(K.dim):
        q = disc.rasterize(K, cell_size, offset=off)
        sol = solve_equilibrium(q, spec, **solve_kw)
        masses.append(sol.capacity_mass)
        asyms.append(capacity_asymptotic(sol).value)
        sizes.append(q.size)
        first = first or sol
    mass, asym = float(np.mean(masses)), float(np.mean(asyms))
    return CapacityEstimate(mass, asym, abs(mass - asym) / mass, float(cell_size),
                            int(max(sizes)), None, first if keep_solution else None)


def richardson(cell_sizes, values, order: float | None = None):
    """Extrapolate c(h) = c0 + A h^p from the three finest levels.

    Returns (c0, p, error_bar).  The bar is the larger of the grid
    convergence index 1.25 |c0 - c_finest| and the gap to the first-order
    extrapolation of the two finest levels, so a spurious high observed order
    cannot shrink it.  Without a sane observed order, a first-order
    least-squares fit over all levels is used with safety factor 3.

    With a known ``order`` the two finest levels are extrapolated directly
    and the bar also covers the least-squares fit through all levels.
    """
    h = np.asarray(cell_sizes, float)
    c = np.asarray(values, float)
    if order is not None:
        r = (h[-2] / h[-1]) ** order
        c0 = c[-1] + (c[-1] - c[-2]) / (r - 1)
        _, lsq = np.polyfit(h ** order, c, 1)
        bar = 1.25 * max(abs(c0 - c[-1]), abs(c0 - lsq))
        return float(c0), float(order), float(bar)
    h1, h2, h3 = h[-3:]
    c1, c2, c3 = c[-3:]
    d12, d23 = c1 - c2, c2 - c3
    p = None
    if d12 * d23 > 0:
        target = d12 / d23

        def f(pp):
            return (h1 ** pp - h2 ** pp) / (h2 ** pp - h3 ** pp) - target

        try:
            if f(0.3) * f(4.0) < 0:
                p = brentq(f, 0.3, 4.0, xtol=1e-12)
        except ValueError:
            p = None
    if p is not None:
        A = d23 / (h2 ** p - h3 ** p)
        c0 = c3 - A * h3 ** p
        first = c3 + (c3 - c2) * h3 / (h2 - h3)
        bar = max(1.25 * abs(c0 - c3), abs(c0 - first))
    else:
        A, c0 = np.polyfit(h, c, 1)
        p = 1.0
        bar = 3.0 * max(abs(c0 - c3), abs(d23))
    bar = max(bar, 1e-12 * abs(c0))
    return float(c0), float(p), float(bar)


@dataclass(frozen=True)
class ConvergenceTable:
    cell_sizes: tuple
    nodes: tuple
    mass: tuple
    asymptotic: tuple
    discrepancy: tuple
    order: float
    extrapolated: float
    error_bar: float
    extrapolated_asymptotic: float
    stability: float  # relative spread of first-order pair extrapolations

    def rows(self):
        return list(zip(self.cell_sizes, self.nodes, self.mass, self.asymptotic, self.discrepancy))


def refine_study(K: ConvexBody, cell_sizes, spec: KernelSpec | None = None,
                 disc: Discretization = DEFAULT_DISCRETIZATION) -> ConvergenceTable:
    hs = [float(h) for h in cell_sizes]
    if len(hs) < 3:
        raise ValueError("refine_study needs at least 3 cell sizes")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError(f"cell sizes must be strictly decreasing, got {hs}")
    ests = [capacity(K, h, spec, disc) for h in hs]
    return convergence_table(hs, ests)


def convergence_table(hs, ests) -> ConvergenceTable:
    mass = [e.mass_estimate for e in ests]
    asym = [e.asymptotic_estimate for e in ests]
    c0, p, bar = richardson(hs, mass)
    a0, _, _ = richardson(hs, asym)
    pair = [mass[k + 1] + (mass[k + 1] - mass[k]) * hs[k + 1] / (hs[k] - hs[k + 1])
            for k in range(len(hs) - 1)]
    stability = (max(pair) - min(pair)) / abs(c0)
    log.info("refine study: order %.3f extrapolated %.6f +- %.2e", p, c0, bar)
    return ConvergenceTable(tuple(hs), tuple(e.nodes for e in ests), tuple(mass), tuple(asym),
                            tuple(e.discrepancy for e in ests), p, c0, bar, a0, float(stability))
