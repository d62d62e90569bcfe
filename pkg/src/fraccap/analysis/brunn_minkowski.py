"""Brunn-Minkowski deficits of the fractional capacity.

For n = 2 the exponent 1/(n - 1) is 1 and the deficit is

    d(lam) = cap*(K_lam) - lam cap*(K1) - (1 - lam) cap*(K2),

nonnegative for convex bodies and zero exactly for homothetic pairs.
Capacities enter through Richardson-extrapolated refinement ladders, and each
deficit carries the linearly propagated error bar of its three terms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import ConvexBody, HomothetyFit, detect_homothety, minkowski_combine
from ..riesz import (DEFAULT_DISCRETIZATION, ConvergenceTable, Discretization, KernelSpec,
                     refine_study)

log = logging.getLogger(__name__)

SATISFIED = "SATISFIED"
VIOLATED = "VIOLATED"
NEAR_EQUALITY = "NEAR-EQUALITY"
CONSISTENT = "CONSISTENT"
TENSION = "TENSION"

LADDER_LEVELS = 4


def ladder(cell_size: float, levels: int = LADDER_LEVELS) -> tuple:
    """Cell sizes cell_size * sqrt(2)^k, coarsest first, ending at cell_size."""
    return tuple(cell_size * math.sqrt(2) ** k for k in range(levels - 1, -1, -1))


def scaled_ladder(K: ConvexBody, reference: ConvexBody, cells) -> tuple:
    """Same relative resolution for K as for the reference body.

    Cells scale with the inradius (about the Steiner point, which moves
    with homotheties), so homothetic bodies get similar discretizations and
    their discretization errors largely cancel in the deficit, and every
    body meets the cell_size <= inradius/10 precondition when the reference
    does.
    """
    s = K.inradius() / reference.inradius()
    return tuple(h * s for h in cells)


@dataclass(frozen=True)
class CapacityValue:
    value: float
    bar: float
    table: ConvergenceTable = field(repr=False, compare=False)


def capacity_value(K: ConvexBody, cells, spec: KernelSpec | None = None,
                   disc: Discretization = DEFAULT_DISCRETIZATION) -> CapacityValue:
    t = refine_study(K, cells, spec, disc)
    return CapacityValue(t.extrapolated, t.error_bar, t)


@dataclass(frozen=True)
class BMReport:
    K1: ConvexBody = field(repr=False)
    K2: ConvexBody = field(repr=False)
    lambdas: tuple
    cap1: CapacityValue
    cap2: CapacityValue
    capacities: tuple  # CapacityValue per lambda
    deficits: tuple
    bars: tuple
    classes: tuple
    homothety: HomothetyFit
    cells: tuple

    @property
    def exponent(self) -> float:
        return 1.0 / (self.K1.dim - 1)

    def count(self, label: str) -> int:
        return sum(c == label for c in self.classes)

    def strictly_positive(self) -> int:
        return sum(d > b for d, b in zip(self.deficits, self.bars))


def deficit(cap_lam: CapacityValue, cap1: CapacityValue, cap2: CapacityValue, lam: float,
            n: int) -> tuple[float, float]:
    """Deficit and its linearly propagated bar for exponent 1/(n-1)."""
    e = 1.0 / (n - 1)
    d = cap_lam.value ** e - lam * cap1.value ** e - (1 - lam) * cap2.value ** e
    bar = (e * cap_lam.value ** (e - 1) * cap_lam.bar
           + lam * e * cap1.value ** (e - 1) * cap1.bar
           + (1 - lam) * e * cap2.value ** (e - 1) * cap2.bar)
    return float(d), float(bar)


def classify(d: float, bar: float) -> str:
    if d < -bar:
        return VIOLATED
    if abs(d) <= bar:
        return NEAR_EQUALITY
    return SATISFIED


def bm_sweep(K1: ConvexBody, K2: ConvexBody, lambdas, cell_size: float | None = None, *,
             cells=None, spec: KernelSpec | None = None,
             disc: Discretization = DEFAULT_DISCRETIZATION) -> BMReport:
    """Capacities of K1, K2 and their combinations with deficit error bars.

    ``cells`` is the refinement ladder for K1 (default: ``ladder(cell_size)``);
    every other body uses the same ladder scaled by its inradius.
    """
    lams = tuple(float(x) for x in lambdas)
    if not lams:
        raise ValueError("empty lambda list")
    if any(not 0 < x < 1 for x in lams):
        raise ValueError(f"lambda values must lie in (0, 1), got {lams}")
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda values must be strictly increasing")
    if cells is None:
        if cell_size is None:
            raise ValueError("give cell_size or cells")
        cells = ladder(cell_size)
    cells = tuple(cells)
    n = K1.dim
    fit = detect_homothety(K1, K2)
    cap1 = capacity_value(K1, cells, spec, disc)
    cap2 = capacity_value(K2, scaled_ladder(K2, K1, cells), spec, disc)
    caps, defs, bars, classes = [], [], [], []
    for lam in lams:
        K = minkowski_combine(lam, K1, K2)
        c = capacity_value(K, scaled_ladder(K, K1, cells), spec, disc)
        d, b = deficit(c, cap1, cap2, lam, n)
        caps.append(c)
        defs.append(d)
        bars.append(b)
        classes.append(classify(d, b))
        log.info("lambda %.3f: cap %.6f deficit %.3e +- %.1e %s", lam, c.value, d, b, classes[-1])
    return BMReport(K1, K2, lams, cap1, cap2, tuple(caps), tuple(defs), tuple(bars),
                    tuple(classes), fit, cells)


@dataclass(frozen=True)
class EqualityProbe:
    classification: str
    homothetic: bool
    residual: float  # relative homothety residual
    deficit: float
    bar: float
    advice: str = ""


def bm_equality_probe(K1: ConvexBody, K2: ConvexBody, cell_size: float, *,
                      spec: KernelSpec | None = None,
                      disc: Discretization = DEFAULT_DISCRETIZATION) -> EqualityProbe:
    """Compare the geometric and the capacitary side of the equality case.

    CONSISTENT when homothety and vanishing deficit at lambda = 1/2 agree.
    TENSION when they disagree, or when ``cell_size`` is above the
    resolution threshold (one tenth of the smaller inradius), in which case
    the bar cannot separate a zero deficit from a positive one.
    """
    fit = detect_homothety(K1, K2)
    homothetic = fit.is_homothetic()
    rel = fit.residual / fit.scale
    limit = min(K1.inradius(), K2.inradius()) / 10
    if cell_size > limit:
        return EqualityProbe(TENSION, homothetic, rel, float("nan"), float("nan"),
                             f"cell_size {cell_size:.4g} exceeds inradius/10 = {limit:.4g}; refine")
    rep = bm_sweep(K1, K2, [0.5], cell_size, spec=spec, disc=disc)
    return equality_classification(fit, rep.deficits[0], rep.bars[0])


def equality_classification(fit: HomothetyFit, d: float, b: float) -> EqualityProbe:
    homothetic = fit.is_homothetic()
    rel = fit.residual / fit.scale
    if d < -b:
        return EqualityProbe(TENSION, homothetic, rel, d, b,
                             "deficit below minus the bar; refine or check the solver")
    if (abs(d) <= b) == homothetic:
        return EqualityProbe(CONSISTENT, homothetic, rel, d, b)
    advice = ("homothetic bodies with a deficit beyond the bar; refine"
              if homothetic else "non-homothetic bodies with a deficit inside the bar; refine")
    return EqualityProbe(TENSION, homothetic, rel, d, b, advice)


def homogeneity_residuals(report: BMReport) -> np.ndarray:
    """Relative misfit of the (lam + (1 - lam) rho)^{n-1} law for homothetic pairs."""
    rho = 1.0 / report.homothety.rho  # K2 = rho K1 + xi
    n = report.K1.dim
    pred = np.array([(lam + (1 - lam) * rho) ** (n - 1) for lam in report.lambdas])
    vals = np.array([c.value for c in report.capacities])
    return vals / (pred * report.cap1.value) - 1.0
