"""Brunn-Minkowski deficits along the disk-square interpolation.

In the plane the deficit cap(K_lam) - lam cap(K1) - (1-lam) cap(K2) should
be positive for non-homothetic bodies and vanish for homothetic ones.
A coarse ladder keeps this under a minute.
Run: python3 demos/brunn_minkowski.py
"""

from fraccap.analysis import bm_sweep
from fraccap.analysis.brunn_minkowski import ladder
from fraccap.geometry import circle_grid, make_ball, make_polytope, scale_translate

grid = circle_grid()
disk = make_ball([0.0, 0.0], 1.0, grid)
square = make_polytope([[1, 1], [-1, 1], [-1, -1], [1, -1]], grid)
cells = ladder(0.05, 3)

pairs = {
    "disk / square": (disk, square),
    "square / 2 square + (3, 0)": (square, scale_translate(square, 2.0, [3.0, 0.0])),
}
for name, (K1, K2) in pairs.items():
    rep = bm_sweep(K1, K2, [0.25, 0.5, 0.75], cells=cells)
    print(name)
    for lam, d, b, c in zip(rep.lambdas, rep.deficits, rep.bars, rep.classes):
        print(f"  lambda={lam:.2f}  deficit {d:+.2e} +- {b:.1e}  {c}")
