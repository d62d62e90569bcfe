"""Concavity index of a positive field.

A positive v is beta-concave when v^beta is concave (beta > 0), log v is
concave (beta = 0) or v^beta is convex (beta < 0).  On a segment with
endpoints x, y all three cases read v(mid) >= M_beta(v(x), v(y)), with M_beta
the power mean.  Power means increase with beta, so passing at beta implies
passing at every smaller beta on the same sample; the index is found by
bisection on a fixed random sample of segments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..geometry import ConvexBody
from ..riesz import DEFAULT_DISCRETIZATION, Discretization, KernelSpec, eval_potential, solve_equilibrium

log = logging.getLogger(__name__)

DEFAULT_BRACKET = (-8.0, 1.0)
DEFAULT_SHELL = (1.2, 6.0)


@dataclass(frozen=True)
class Region:
    """Annulus r_min <= |x - center| <= r_max, optionally minus a body.

    Points of ``body`` and points within ``margin`` of it are excluded.
    r_min = 0 gives a full disk or ball.
    """

    center: np.ndarray
    r_min: float
    r_max: float
    body: ConvexBody | None = field(default=None, repr=False)
    margin: float = 0.0

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max:
            raise ValueError(f"empty region: radii [{self.r_min}, {self.r_max}]")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, x) -> np.ndarray:
        r = np.linalg.norm(x - self.center, axis=1)
        ok = (r >= self.r_min) & (r <= self.r_max)
        if self.body is not None:
            ok &= self.body.margin(x) > self.margin
        return ok

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        n = self.dim
        u = rng.random(count)
        r = (self.r_min ** n + u * (self.r_max ** n - self.r_min ** n)) ** (1.0 / n)
        g = rng.standard_normal((count, n))
        return self.center + r[:, None] * g / np.linalg.norm(g, axis=1)[:, None]

    def describe(self) -> dict:
        return {"center": self.center.tolist(), "r_min": self.r_min, "r_max": self.r_max,
                "excludes_body": self.body is not None, "margin": self.margin}


@dataclass(frozen=True)
class BetaVerdict:
    beta: float
    passed: bool
    worst: float  # min over segments of (v(mid) - M_beta) / M_beta
    location: tuple  # midpoint of the worst segment


@dataclass(frozen=True)
class ConcavityReport:
    alpha: float
    beta_lo: float
    beta_hi: float
    verdicts: tuple
    n_segments: int
    seed: int
    region: dict
    below_bracket: bool = False
    ceiling: float | None = None  # 1/(1-n) for body experiments

    @property
    def gap(self) -> float | None:
        return None if self.ceiling is None else self.alpha - self.ceiling


@dataclass(frozen=True)
class SegmentSample:
    x: np.ndarray
    y: np.ndarray
    log_vx: np.ndarray
    log_vy: np.ndarray
    log_vm: np.ndarray

    def test(self, beta: float, tol: float) -> BetaVerdict:
        a, b = self.log_vx, self.log_vy
        if beta == 0.0:
            log_mean = 0.5 * (a + b)
        else:
            log_mean = (np.logaddexp(beta * a, beta * b) - np.log(2.0)) / beta
        rel = np.expm1(self.log_vm - log_mean)
        k = int(np.argmin(rel))
        mid = 0.5 * (self.x[k] + self.y[k])
        return BetaVerdict(float(beta), bool(rel[k] >= -tol), float(rel[k]), tuple(mid.tolist()))


def sample_segments(field_fn: Callable, region: Region, n_segments: int, seed: int) -> SegmentSample:
    """Random segments with both endpoints and the midpoint in the region."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    have, rounds = 0, 0
    while have < n_segments:
        rounds += 1
        if rounds > 200:
            raise ValueError("region too thin: cannot place segments with interior midpoints")
        m = 2 * (n_segments - have) + 16
        x = region.sample(rng, m)
        y = region.sample(rng, m)
        x, y = x[region.contains(x)], y[region.contains(y)]
        k = min(len(x), len(y))
        x, y = x[:k], y[:k]
        ok = region.contains(0.5 * (x + y))
        xs.append(x[ok])
        ys.append(y[ok])
        have += int(ok.sum())
    x = np.concatenate(xs)[:n_segments]
    y = np.concatenate(ys)[:n_segments]
    pts = np.concatenate([x, y, 0.5 * (x + y)])
    v = np.asarray(field_fn(pts), float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("field must be finite and strictly positive on the region")
    lv = np.log(v)
    n = len(x)
    return SegmentSample(x, y, lv[:n], lv[n:2 * n], lv[2 * n:])


def concavity_index(field_fn: Callable, region: Region, beta_bracket=DEFAULT_BRACKET,
                    n_segments: int = 4000, seed: int = 0, *, width: float = 1e-3,
                    tol: float = 1e-9) -> ConcavityReport:
    """Largest beta in the bracket for which every sampled segment passes.

    ``tol`` is the relative slack in v(mid) >= (1 - tol) M_beta; ``width``
    the final bracket width.
    """
    lo, hi = map(float, beta_bracket)
    if not lo < hi <= 1:
        raise ValueError(f"bad beta bracket {beta_bracket}")
    sample = sample_segments(field_fn, region, n_segments, seed)
    verdicts = []

    def run(beta):
        v = sample.test(beta, tol)
        verdicts.append(v)
        return v.passed

    below = False
    if run(hi):
        a_lo = a_hi = hi
    elif not run(lo):
        a_lo = a_hi = lo
        below = True
    else:
        a_lo, a_hi = lo, hi
        while a_hi - a_lo > width:
            mid = 0.5 * (a_lo + a_hi)
            if run(mid):
                a_lo = mid
            else:
                a_hi = mid
    passed = [v.beta for v in verdicts if v.passed]
    failed = [v.beta for v in verdicts if not v.passed]
    if passed and failed and max(passed) >= min(failed):
        raise AssertionError("beta verdicts are not monotone on a fixed sample")
    log.info("concavity index %.4f in [%.4f, %.4f] from %d segments (seed %d)",
             a_lo, a_lo, a_hi, n_segments, seed)
    return ConcavityReport(a_lo, a_lo, a_hi, tuple(verdicts), n_segments, seed,
                           region.describe(), below)


def body_concavity_experiment(K: ConvexBody, cell_size: float, shell=DEFAULT_SHELL, *,
                              n_segments: int = 4000, seed: int = 0,
                              beta_bracket=DEFAULT_BRACKET, width: float = 1e-3,
                              tol: float = 1e-9,
                              disc: Discretization = DEFAULT_DISCRETIZATION) -> ConcavityReport:
    """Concavity index of the computed capacitary potential of K.

    The shell is given in multiples of the circumradius about the body
    center; points within two cell sizes of the body are excluded.
    """
    c = K.center()
    R = K.circumradius(c)
    r_min, r_max = shell[0] * R, shell[1] * R
    if shell[0] <= 1.0 or r_min <= R + 2 * cell_size:
        raise ValueError(f"shell {tuple(shell)} overlaps the body or its boundary layer")
    spec = KernelSpec.fractional(K.dim)
    sol = solve_equilibrium(disc.rasterize(K, cell_size), spec)
    region = Region(c, r_min, r_max, K, 2 * cell_size)
    rep = concavity_index(lambda p: eval_potential(sol, p), region, beta_bracket, n_segments,
                          seed, width=width, tol=tol)
    return ConcavityReport(rep.alpha, rep.beta_lo, rep.beta_hi, rep.verdicts, rep.n_segments,
                           rep.seed, {**rep.region, "shell": list(map(float, shell)),
                                      "cell_size": cell_size}, rep.below_bracket,
                           1.0 / (1 - K.dim))
