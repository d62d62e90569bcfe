"""Super-level sets of the disk potential.

Level sets are nested concentric disks of radius 1/sin(pi t/2).  The ratio
(r/s) rho for two levels r < s is therefore not 1, and the three-level
inclusion at t = 1/3 fails by a small margin.
Run: python3 demos/level_sets.py
"""

from fraccap.analysis import homothetic_levels_experiment, three_levels_experiment
from fraccap.geometry import circle_grid, make_ball

disk = make_ball([0.0, 0.0], 1.0, circle_grid())

rep = homothetic_levels_experiment(disk, 0.3, 0.5, 0.04)
print(f"levels 0.3 / 0.5: rho {rep.fits[0].rho:.4f}, (r/s) rho {rep.extra['relation']:.4f}")

tri = three_levels_experiment(disk, 0.5, 0.25, 0.5, 0.04).extra
print(f"three levels, t={tri['t']:.4f}: margin {tri['margin']:+.2e} "
      f"(tolerance {tri['tolerance']:.1e})")
