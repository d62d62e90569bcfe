"""Capacity of the unit disk by three independent routes.

The kernel solver gives the total equilibrium mass and the far-field limit
of u|x|; the harmonic extension into the upper half-space gives lim |X|U.
All three should approach 2/pi.
Run: python3 demos/disk_capacity.py
"""

import math

from fraccap.extension import solve_extension
from fraccap.geometry import circle_grid, make_ball
from fraccap.riesz import capacity, refine_study

disk = make_ball([0.0, 0.0], 1.0, circle_grid())

est = capacity(disk, 0.04)
print(f"h=0.04  mass {est.mass_estimate:.5f}  far field {est.asymptotic_estimate:.5f}")

table = refine_study(disk, [0.08, 0.0566, 0.04, 0.0283])
for h, n, m, a, d in table.rows():
    print(f"  h={h:.4f} nodes={n:5d} mass={m:.5f} asym={a:.5f}")
print(f"extrapolated {table.extrapolated:.5f} +- {table.error_bar:.1e} "
      f"(observed order {table.order:.2f})")

ext = solve_extension(disk)
print(f"extension  {ext.capacity_estimate:.5f}")
print(f"2/pi       {2 / math.pi:.5f}")
