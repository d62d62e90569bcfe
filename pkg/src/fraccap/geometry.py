"""Convex bodies represented by sampled support functions.

A body is stored as the values of its support function h_K(theta) on a fixed
grid of unit directions, optionally tagged with an exact descriptor (ball or
polytope).  Minkowski combinations and homotheties act linearly on support
values, so they are exact on the grid.  Bodies without a descriptor are the
outer approximation {x : <x, theta_i> <= h_i for all i}; every set predicate
below is relative to that approximation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

log = logging.getLogger(__name__)

DEFAULT_COUNT = {2: 256, 3: 512}
HOMOTHETY_THRESHOLD = 1e-3


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Antipodally symmetric set of unit directions in R^2 or R^3."""

    dim: int
    directions: np.ndarray
    antipode: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.directions)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, DirectionGrid):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.directions, other.directions)

    __hash__ = object.__hash__

    def max_gap(self) -> float:
        """Largest angle between a direction and its nearest neighbour."""
        if self.dim == 2:
            return 2 * math.pi / self.count
        cos = self.directions @ self.directions.T
        np.fill_diagonal(cos, -1.0)
        return float(np.arccos(np.clip(cos.max(axis=1), -1, 1)).max())


def circle_grid(count: int = DEFAULT_COUNT[2]) -> DirectionGrid:
    if count < 64 or count % 2:
        raise ValueError(f"circle grid needs an even count >= 64, got {count}")
    t = 2 * math.pi * np.arange(count) / count
    dirs = np.column_stack([np.cos(t), np.sin(t)])
    anti = (np.arange(count) + count // 2) % count
    return DirectionGrid(2, _frozen(dirs), _frozen(anti).astype(int))


def sphere_grid(count: int = DEFAULT_COUNT[3]) -> DirectionGrid:
    """Fibonacci points on the upper hemisphere plus their antipodes."""
    if count < 64 or count % 2:
        raise ValueError(f"sphere grid needs an even count >= 64, got {count}")
    half = count // 2
    k = np.arange(half) + 0.5
    z = 1.0 - k / half  # z in (0, 1)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(half)
    r = np.sqrt(1.0 - z * z)
    up = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    dirs = np.vstack([up, -up])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    anti = np.concatenate([np.arange(half) + half, np.arange(half)])
    return DirectionGrid(3, _frozen(dirs), _frozen(anti).astype(int))


def direction_grid(dim: int, count: int | None = None) -> DirectionGrid:
    if dim == 2:
        return circle_grid(count or DEFAULT_COUNT[2])
    if dim == 3:
        return sphere_grid(count or DEFAULT_COUNT[3])
    raise ValueError(f"dimension must be 2 or 3, got {dim}")


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class Polytope:
    vertices: np.ndarray
    # rows (a, b) with |a| = 1 and a.x + b <= 0 inside
    equations: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class ConvexBody:
    grid: DirectionGrid
    support_values: np.ndarray
    descriptor: Ball | Polytope | None = None

    def __post_init__(self):
        h = self.support_values
        if h.shape != (self.grid.count,):
            raise ValueError("support_values must have one entry per grid direction")
        if not np.all(np.isfinite(h)):
            raise ValueError("support values must be finite")
        if self.min_width() <= 0:
            raise ValueError("body has empty interior (minimal width <= 0)")

    @property
    def dim(self) -> int:
        return self.grid.dim

    def widths(self) -> np.ndarray:
        return self.support_values + self.support_values[self.grid.antipode]

    def min_width(self) -> float:
        return float(self.widths().min())

    def mean_halfwidth(self) -> float:
        return float(self.widths().mean() / 2)

    def center(self) -> np.ndarray:
        """Steiner point (descriptor center for balls); always interior."""
        if isinstance(self.descriptor, Ball):
            return np.array(self.descriptor.center)
        d = self.grid.directions
        return self.dim * (self.support_values[:, None] * d).mean(axis=0)

    def circumradius(self, center=None) -> float:
        c = self.center() if center is None else np.asarray(center, float)
        if isinstance(self.descriptor, Ball):
            return float(np.linalg.norm(c - self.descriptor.center) + self.descriptor.radius)
        if isinstance(self.descriptor, Polytope):
            return float(np.linalg.norm(self.descriptor.vertices - c, axis=1).max())
        r = (self.support_values - self.grid.directions @ c).max()
        # vertices of the outer polygon/polyhedron overshoot the support values
        return float(r / math.cos(min(self.grid.max_gap(), 1.0) / 2))

    def inradius(self, center=None) -> float:
        """Radius of the largest ball about ``center`` inside the body."""
        c = self.center() if center is None else np.asarray(center, float)
        return float(-self.margin(c[None, :])[0])

    def margin(self, points) -> np.ndarray:
        """Signed gauge margin: minus the boundary distance inside, <= the distance outside."""
        x = np.atleast_2d(np.asarray(points, float))
        desc = self.descriptor
        if isinstance(desc, Ball):
            return np.linalg.norm(x - desc.center, axis=1) - desc.radius
        if isinstance(desc, Polytope):
            eq = desc.equations
            return (x @ eq[:, :-1].T + eq[:, -1]).max(axis=1)
        return (x @ self.grid.directions.T - self.support_values).max(axis=1)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        scale = max(1.0, float(np.abs(self.support_values).max()))
        return self.margin(points) <= tol * scale


@dataclass(frozen=True)
class HomothetyFit:
    rho: float
    xi: np.ndarray
    residual: float
    constrained: bool = False
    scale: float = 1.0  # mean half-width of the target body

    def is_homothetic(self, threshold: float = HOMOTHETY_THRESHOLD) -> bool:
        return (not self.constrained) and self.residual / self.scale < threshold


@dataclass(frozen=True, eq=False)
class Quadrature:
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    cell_size: float

    @property
    def size(self) -> int:
        return len(self.weights)

    def measure(self) -> float:
        return float(self.weights.sum())


# ---------------------------------------------------------------- constructors


def make_ball(center, radius: float, grid: DirectionGrid) -> ConvexBody:
    c = np.asarray(center, float)
    if c.shape != (grid.dim,):
        raise ValueError(f"center must have {grid.dim} coordinates")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    h = grid.directions @ c + radius
    return ConvexBody(grid, _frozen(h), Ball(_frozen(c), float(radius)))


def make_polytope(vertices, grid: DirectionGrid) -> ConvexBody:
    v = np.atleast_2d(np.asarray(vertices, float))
    n = grid.dim
    if v.shape[1] != n:
        raise ValueError(f"vertices must have {n} coordinates")
    if len(v) < n + 1:
        raise ValueError(f"need at least {n + 1} vertices, got {len(v)}")
    sv = np.linalg.svd(v - v.mean(axis=0), compute_uv=False)
    if sv[n - 1] <= 1e-12 * max(1.0, sv[0]):
        raise ValueError("vertices span a lower-dimensional set (empty interior)")
    try:
        hull = ConvexHull(v)
    except QhullError as exc:  # pragma: no cover - guarded by the rank test
        raise ValueError(f"degenerate vertex set: {exc}") from None
    verts = v[hull.vertices]
    h = (grid.directions @ verts.T).max(axis=1)
    return ConvexBody(grid, _frozen(h), Polytope(_frozen(verts), _frozen(hull.equations)))


def from_support(values, grid: DirectionGrid) -> ConvexBody:
    return ConvexBody(grid, _frozen(values))


def _check_grids(K1: ConvexBody, K2: ConvexBody):
    if K1.grid != K2.grid:
        raise ValueError("bodies are sampled on different direction grids")


def minkowski_combine(lam: float, K1: ConvexBody, K2: ConvexBody) -> ConvexBody:
    """The body lam*K1 + (1-lam)*K2."""
    _check_grids(K1, K2)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 1.0:
        return K1
    if lam == 0.0:
        return K2
    h = lam * K1.support_values + (1 - lam) * K2.support_values
    desc = None
    if isinstance(K1.descriptor, Ball) and isinstance(K2.descriptor, Ball):
        b1, b2 = K1.descriptor, K2.descriptor
        desc = Ball(_frozen(lam * b1.center + (1 - lam) * b2.center),
                    lam * b1.radius + (1 - lam) * b2.radius)
    return ConvexBody(K1.grid, _frozen(h), desc)


def scale_translate(K: ConvexBody, rho: float, xi) -> ConvexBody:
    """The body rho*K + xi."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    xi = np.asarray(xi, float)
    if rho == 1.0 and not xi.any():
        return K
    h = rho * K.support_values + K.grid.directions @ xi
    desc = K.descriptor
    if isinstance(desc, Ball):
        desc = Ball(_frozen(rho * desc.center + xi), rho * desc.radius)
    elif isinstance(desc, Polytope):
        eq = desc.equations.copy()
        eq[:, -1] = rho * eq[:, -1] - eq[:, :-1] @ xi
        desc = Polytope(_frozen(rho * desc.vertices + xi), _frozen(eq))
    return ConvexBody(K.grid, _frozen(h), desc)


def rotate(K: ConvexBody, angle: float) -> ConvexBody:
    """Rotate a planar body about the origin (polytopes and balls stay exact)."""
    if K.dim != 2:
        raise ValueError("rotate is only defined for n=2")
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    if isinstance(K.descriptor, Polytope):
        return make_polytope(K.descriptor.vertices @ R.T, K.grid)
    if isinstance(K.descriptor, Ball):
        return make_ball(R @ K.descriptor.center, K.descriptor.radius, K.grid)
    raise ValueError("only bodies with an exact descriptor can be rotated")


def contains_point(K: ConvexBody, x) -> bool:
    return bool(K.contains(np.asarray(x, float)[None, :])[0])


def is_subset(K1: ConvexBody, K2: ConvexBody, tol: float = 0.0) -> bool:
    _check_grids(K1, K2)
    return bool(np.all(K1.support_values <= K2.support_values + tol))


def detect_homothety(K1: ConvexBody, K2: ConvexBody) -> HomothetyFit:
    """Least-squares (rho, xi) with h_K1 ~ rho*h_K2 + <xi, theta>."""
    _check_grids(K1, K2)
    d = K1.grid.directions
    A = np.column_stack([K2.support_values, d])
    b = K1.support_values
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise np.linalg.LinAlgError("singular homothety normal equations")
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    rho, xi, constrained = float(sol[0]), sol[1:], False
    if rho <= 0:
        rho = np.finfo(float).eps
        xi, *_ = np.linalg.lstsq(d, b - rho * K2.support_values, rcond=None)
        constrained = True
    r = b - rho * K2.support_values - d @ xi
    return HomothetyFit(rho, np.asarray(xi), float(np.sqrt(np.mean(r * r))), constrained,
                        K1.mean_halfwidth())


# ---------------------------------------------------------------- rasterization


def lattice_rotation(dim: int, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if dim == 2:
        return np.array([[c, -s], [s, c]])
    b = angle * (math.sqrt(5) - 1) / 2
    cb, sb = math.cos(b), math.sin(b)
    Rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    Rx = np.array([[1, 0, 0], [0, cb, -sb], [0, sb, cb]])
    return Rz @ Rx


def rasterize(K: ConvexBody, cell_size: float, *, occupancy: bool = False,
              subsamples: int = 4, angle: float = 0.0, offset=0.0,
              min_nodes: int = 50) -> Quadrature:
    """Cover K by lattice cells of side ``cell_size``.

    The lattice is anchored at the global origin: cell k has its center at
    Q @ ((k + offset) * cell_size) with Q a rotation by ``angle``.  By default
    a cell is kept when its center lies in K and carries the full cell
    measure.  With ``occupancy=True`` every cell meeting K (detected on a
    ``subsamples``^n sub-lattice) is kept with weight equal to its occupied
    fraction and node moved to the centroid of the occupied sub-cells.
    Nodes are returned in lexicographic lattice-index order.
    """
    if not cell_size > 0:
        raise ValueError("cell_size must be positive")
    n = K.dim
    h = float(cell_size)
    inr = K.inradius()
    if h > inr / 10 * (1 + 1e-9):
        log.warning("cell_size %.4g exceeds one tenth of the inradius %.4g", h, inr)
    Q = lattice_rotation(n, angle)
    off = np.broadcast_to(np.asarray(offset, float), (n,))
    c = Q.T @ K.center()
    R = K.circumradius() + h * math.sqrt(n)
    lo = np.floor((c - R) / h - off).astype(int)
    hi = np.ceil((c + R) / h - off).astype(int)
    axes = [np.arange(lo[k], hi[k] + 1) for k in range(n)]
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    centers = ((idx + off) * h) @ Q.T

    if not occupancy:
        keep = K.contains(centers)
        nodes = centers[keep]
        weights = np.full(len(nodes), h ** n)
    else:
        half_diag = 0.5 * h * math.sqrt(n) * (1 + 1e-9)
        m = K.margin(centers)
        inner = m <= -half_diag
        edge = np.flatnonzero(np.abs(m) < half_diag)
        o = (np.arange(subsamples) + 0.5) / subsamples - 0.5
        sub = np.stack(np.meshgrid(*([o] * n), indexing="ij"), axis=-1).reshape(-1, n)
        sub = (sub * h) @ Q.T
        pts = centers[edge][:, None, :] + sub[None]
        ins = K.contains(pts.reshape(-1, n)).reshape(len(edge), -1)
        cnt = ins.sum(axis=1)
        frac = cnt / ins.shape[1]
        keep = inner.copy()
        keep[edge[cnt > 0]] = True
        nodes = centers.copy()
        weights = np.full(len(centers), h ** n)
        hit = cnt > 0
        nodes[edge[hit]] = (pts[hit] * ins[hit][..., None]).sum(axis=1) / cnt[hit][:, None]
        weights[edge] = frac * h ** n
        nodes, weights = nodes[keep], weights[keep]

    if len(weights) < min_nodes:
        raise ValueError(f"cell_size {h} too coarse: {len(weights)} nodes (< {min_nodes})")
    return Quadrature(n, _frozen(nodes), _frozen(weights), h)


def measure_error_bound(K: ConvexBody, cell_size: float) -> float:
    """Documented relative bound 2 * boundary measure * cell_size / measure.

    Boundary measure and volume come from Cauchy/Kubota-type formulas on the
    support function (exact for the sampled outer approximation up to grid
    resolution).
    """
    h = K.support_values
    if K.dim == 2:
        perimeter = 2 * math.pi * h.mean()
        area = _polygon_area(K)
        return 2 * perimeter * cell_size / area
    # crude but conservative: enclosing ball surface over inscribed ball volume
    R, r = K.circumradius(), K.inradius()
    return 2 * 4 * math.pi * R ** 2 * cell_size / (4 / 3 * math.pi * r ** 3)


def _polygon_area(K: ConvexBody) -> float:
    d = K.grid.directions
    h = K.support_values
    t = np.arctan2(d[:, 1], d[:, 0])
    order = np.argsort(t)
    d, h = d[order], h[order]
    d2, h2 = np.roll(d, -1, axis=0), np.roll(h, -1)
    det = d[:, 0] * d2[:, 1] - d[:, 1] * d2[:, 0]
    vx = (h * d2[:, 1] - h2 * d[:, 1]) / det
    vy = (d[:, 0] * h2 - d2[:, 0] * h) / det
    return 0.5 * abs(np.sum(vx * np.roll(vy, -1) - np.roll(vx, -1) * vy))
