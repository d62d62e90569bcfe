"""Concavity index of computed capacitary potentials.

For a ball the conjectured index is 1/(1-n) = -1 in the plane.  The exact
disk potential (2/pi) arcsin(1/|x|) has u^-1 ~ (pi/2)(|x| - 1/(6|x|)) for large |x|,
which is not convex along radii, so the measured index sits below -1.
Run: python3 demos/potential_concavity.py
"""

import numpy as np

from fraccap.analysis import Region, body_concavity_experiment, concavity_index
from fraccap.geometry import circle_grid, make_ball, make_polytope

grid = circle_grid()
disk = make_ball([0.0, 0.0], 1.0, grid)
square = make_polytope([[1, 1], [-1, 1], [-1, -1], [1, -1]], grid)

exact = concavity_index(lambda p: 2 / np.pi * np.arcsin(1 / np.linalg.norm(p, axis=1)),
                        Region(np.zeros(2), 1.2, 6.0))
print(f"exact disk potential: alpha = {exact.alpha:.4f}")
for name, K in (("disk", disk), ("square", square)):
    rep = body_concavity_experiment(K, 0.04)
    print(f"computed {name}: alpha = {rep.alpha:.4f}, gap to -1 = {rep.gap:+.4f}")
