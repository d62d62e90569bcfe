"""Harmonic extension of a planar body into the upper half-space of R^3.

U is harmonic off the slab K x {0}, equal to 1 on it and decaying like
c/|X|.  Its trace on z = 0 is the 1-Riesz capacitary potential of K and
c = lim |X| U(X) is the same cap* the kernel solver computes, so this module
is an independent route to the capacity.  It is also the source of the
three-dimensional level bodies {U >= r} whose Newtonian capacity should be
cap*/r.

Discretization: 7-point finite-volume Laplacian on [-L, L]^2 x [0, L] around the body
center, with the lateral lattice offset by half a spacing so that straight
edges fall between nodes rather than on them (a node row on an edge widens
the plate by half a cell).  Zero-flux reflection at z = 0 off the body and
a far-field Robin condition on the outer faces; see _assemble.  The sparse
system is solved by CG preconditioned with smoothed-aggregation AMG.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp

from .geometry import ConvexBody, Quadrature
from .riesz import KernelSpec, richardson, solve_equilibrium

log = logging.getLogger(__name__)

SOLVE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ExtensionGrid:
    center: np.ndarray
    half_width: float  # L
    spacing: float  # h
    mask: np.ndarray = field(repr=False)  # (N, N) body points on z = 0

    @property
    def steps(self) -> int:
        return self.mask.shape[0] // 2

    def lateral(self) -> np.ndarray:
        return _lateral(self.steps, self.spacing)

    def coordinates(self):
        """Coordinates relative to the grid center, shape (2n, 2n, n + 1) each."""
        x = self.lateral()
        return np.meshgrid(x, x, np.arange(0, self.steps + 1) * self.spacing, indexing="ij")


def _lateral(n: int, h: float) -> np.ndarray:
    return (np.arange(-n, n) + 0.5) * h


def make_extension_grid(K: ConvexBody, half_width: float | None = None,
                        spacing: float | None = None) -> ExtensionGrid:
    if K.dim != 2:
        raise ValueError("the extension solver handles planar bodies only")
    c = K.center()
    R = K.circumradius(c)
    L = 4.0 * R if half_width is None else float(half_width)
    h = K.inradius(c) / 10.0 if spacing is None else float(spacing)
    if L < 4.0 * R * (1 - 1e-12):
        raise ValueError(f"half width {L:.4g} is below 4x the circumradius {R:.4g}")
    if h > K.inradius(c) / 10.0 * (1 + 1e-9):
        raise ValueError(f"spacing {h:.4g} exceeds inradius/10 = {K.inradius(c) / 10:.4g}")
    n = int(math.ceil(L / h - 1e-9))
    x = _lateral(n, h)
    X, Y = np.meshgrid(x + c[0], x + c[1], indexing="ij")
    mask = K.contains(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    if not mask.any():
        raise ValueError("body mask is empty")
    return ExtensionGrid(np.asarray(c, float), n * h, h, mask)


@dataclass(frozen=True, eq=False)
class ExtensionSolution:
    grid: ExtensionGrid
    U: np.ndarray = field(repr=False)  # (N, N, Nz)
    capacity_estimate: float
    residual: float = 0.0
    iterations: int = 0

    @classmethod
    def from_field(cls, grid: ExtensionGrid, U) -> "ExtensionSolution":
        """Wrap a given field (used for synthetic checks)."""
        sol = cls(grid, np.asarray(U, float), float("nan"))
        return cls(grid, sol.U, extension_capacity(sol))


def _half_factors(n: int) -> np.ndarray:
    f = np.ones(n)
    f[[0, -1]] = 0.5
    return f


def _assemble(grid: ExtensionGrid):
    """Vertex-centered finite volumes, scaled by 1/h.

    Dual cells on the box faces and on z = 0 are cut in half (quarters on
    edges), which gives the zero-flux reflection on z = 0 for free.  The
    outer faces carry the far-field Robin condition dU/dn = -(n.X/|X|^2) U,
    exact for a pure c/|X| field.  The matrix is symmetric and the unknowns
    are all nodes off the body.
    """
    h = grid.spacing
    X, Y, Z = grid.coordinates()
    shape = X.shape
    R2 = X * X + Y * Y + Z * Z
    f = [_half_factors(k) for k in shape]
    f[2][0] = 0.5
    fx, fy, fz = np.meshgrid(*f, indexing="ij")
    mask = np.zeros(shape, bool)
    mask[:, :, 0] = grid.mask
    unknown = ~mask
    idx = -np.ones(shape, np.int64)
    idx[unknown] = np.arange(unknown.sum())
    diag = np.zeros(shape)
    rhs = np.zeros(shape)
    rows, cols, vals = [], [], []
    trans = {0: fy * fz, 1: fx * fz, 2: fx * fy}
    for d in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[d] = slice(0, -1)
        hi[d] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        w = trans[d][lo]  # transverse factors agree on both ends
        diag[lo] += w
        diag[hi] += w
        i, j = idx[lo], idx[hi]
        both = (i >= 0) & (j >= 0)
        rows += [i[both], j[both]]
        cols += [j[both], i[both]]
        vals += [-w[both], -w[both]]
        # Dirichlet U = 1 on the body moves to the right-hand side
        rhs[lo] += np.where(mask[hi], w, 0.0)
        rhs[hi] += np.where(mask[lo], w, 0.0)
    # Robin terms on the five outer faces
    for d, coord in ((0, X), (1, Y), (2, Z)):
        for end in ((0, -1) if d < 2 else (-1,)):
            sl = [slice(None)] * 3
            sl[d] = end
            sl = tuple(sl)
            normal = 1.0 if end == -1 else -1.0
            diag[sl] += trans[d][sl] * h * normal * coord[sl] / R2[sl]
    I = idx[unknown]
    rows.append(I)
    cols.append(I)
    vals.append(diag[unknown])
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(I), len(I)))
    return A, unknown, mask, rhs[unknown]


def solve_extension(K: ConvexBody, grid: ExtensionGrid | None = None, *,
                    tol: float = SOLVE_TOL, maxiter: int = 500) -> ExtensionSolution:
    grid = grid or make_extension_grid(K)
    A, unknown, mask, b = _assemble(grid)
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    hist: list = []
    u = ml.solve(b, tol=tol, accel="cg", maxiter=maxiter, residuals=hist)
    resid = float(np.linalg.norm(b - A @ u) / np.linalg.norm(b))
    if resid > 10 * tol:
        raise RuntimeError(f"extension solve did not converge: relative residual {resid:.2e} "
                           f"after {len(hist)} iterations")
    U = np.ones(mask.shape)
    U[unknown] = u
    c = extension_capacity(ExtensionSolution(grid, U, 0.0))
    log.info("extension solve: capacity %.6f after %d iterations", c, len(hist))
    lo, hi = U.min(), U.max()
    if lo < -1e-9 or hi > 1 + 1e-9:
        raise RuntimeError(f"discrete maximum principle violated: U in [{lo:.3e}, {hi:.6f}]")
    return ExtensionSolution(grid, U, c, resid, len(hist))


def extension_capacity(sol: ExtensionSolution, radii=None) -> float:
    """lim |X| U(X) from half-shell averages, fitted as a + b/R.

    The half-space already carries the full far-field coefficient: the
    mirrored half has the same |X| U, so no doubling is applied.
    """
    g = sol.grid
    L, h = g.half_width, g.spacing
    radii = np.linspace(0.35 * L, 0.8 * L, 6) if radii is None else np.asarray(radii, float)
    if radii.max() > 0.9 * L:
        raise ValueError(f"shell radius {radii.max():.4g} too close to the box boundary (L={L:.4g})")
    X, Y, Z = g.coordinates()
    R = np.sqrt(X * X + Y * Y + Z * Z)
    vals = []
    for r in radii:
        sel = np.abs(R - r) < h / 2
        vals.append(float((R[sel] * sol.U[sel]).mean()))
    _, a = np.polyfit(1.0 / radii, vals, 1)
    return float(a)


def level_mask(sol: ExtensionSolution, r: float, stride: int = 1) -> np.ndarray:
    """Cell mask of {U >= r} on the half grid, optionally subsampled."""
    if not 0 < r < 1:
        raise ValueError(f"level r must lie in (0, 1), got {r}")
    S = sol.U[::stride, ::stride, ::stride] >= r
    if S[[0, -1]].any() or S[:, [0, -1]].any() or S[:, :, -1].any():
        raise ValueError(f"level set U >= {r} touches the box boundary; enlarge the box")
    return S


def extension_level_body(sol: ExtensionSolution, r: float, stride: int = 1) -> Quadrature:
    """Hollow cell quadrature of {U >= r} mirrored across z = 0.

    Interior cells carry no equilibrium charge in the limit, so dropping
    cells whose six neighbors are all inside keeps the capacity while making
    the dense solve affordable.
    """
    S = level_mask(sol, r, stride)
    full = np.concatenate([S[:, :, :0:-1], S], axis=2)  # z from -top to +top
    P = np.pad(full, 1)
    interior = full.copy()
    for d in range(3):
        for sgn in (-1, 1):
            interior &= np.roll(P, sgn, axis=d)[1:-1, 1:-1, 1:-1]
    shell = full & ~interior
    g = sol.grid
    h = g.spacing * stride
    x = g.lateral()[::stride]
    nz = S.shape[2] - 1
    z = np.arange(-nz, nz + 1) * h
    ix, iy, iz = np.nonzero(shell)
    nodes = np.column_stack([x[ix] + g.center[0], x[iy] + g.center[1], z[iz]])
    return Quadrature(3, nodes, np.full(len(nodes), h ** 3), h)


def level_body_capacity(sol: ExtensionSolution, r: float, strides=(3, 2, 1)):
    """Newtonian capacity of {U >= r}, extrapolated over extraction strides.

    Cell-granular extraction puts the charges up to half a cell inside the
    true surface, a first-order error, so the extrapolation uses order 1.
    Returns (extrapolated, error_bar, per-stride values).
    """
    spec = KernelSpec.newtonian(3)
    hs, vals = [], []
    for k in strides:
        q = extension_level_body(sol, r, k)
        vals.append(solve_equilibrium(q, spec).capacity_mass)
        hs.append(q.cell_size)
    c0, _, bar = richardson(hs, vals, order=1.0)
    return c0, bar, tuple(vals)
