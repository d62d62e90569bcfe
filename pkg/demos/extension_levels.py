"""Newtonian capacity of the 3D level bodies {U >= r} of the disk extension.

The level bodies are confocal oblate spheroids with capacity cap/r.
Run: python3 demos/extension_levels.py
"""

from fraccap.extension import level_body_capacity, solve_extension
from fraccap.geometry import circle_grid, make_ball

disk = make_ball([0.0, 0.0], 1.0, circle_grid())
sol = solve_extension(disk)
print(f"extension capacity {sol.capacity_estimate:.5f}")
for r in (0.3, 0.5, 0.7):
    c, bar, _ = level_body_capacity(sol, r)
    print(f"  r={r}: Cap {c:.4f} +- {bar:.1e}, cap/r {sol.capacity_estimate / r:.4f}")
