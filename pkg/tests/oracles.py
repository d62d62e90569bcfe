"""Independent reference values and closed forms used by the tests.

Nothing here calls the package solvers.
"""

import math

import numpy as np

# conducting disk of radius R: cap* = lim u|x| = 2R/pi
DISK_CAPACITY = 2 / math.pi
# unit-square plate, side 1: 0.3667874 (Newtonian, lim u|x| normalization);
# the (+-1, +-1) square has side 2
SQUARE_CAPACITY = 2 * 0.3667874


def disk_potential(r, R=1.0):
    """Exact exterior potential (2/pi) arcsin(R/|x|) of the disk in its plane."""
    r = np.asarray(r, float)
    return np.where(r <= R, 1.0, 2 / np.pi * np.arcsin(np.minimum(R / np.maximum(r, R), 1.0)))


def disk_level_radius(t, R=1.0):
    """Radius of {u >= t} for the exact disk potential."""
    return R / math.sin(math.pi * t / 2)


def disk_extension(X, Y, Z):
    """Harmonic extension of the unit disk (oblate spheroidal coordinates)."""
    rho2 = X ** 2 + Y ** 2
    s = 1 + rho2 + Z ** 2
    a2 = (s + np.sqrt(s ** 2 - 4 * rho2)) / 2
    return np.where(a2 <= 1, 1.0, 2 / np.pi * np.arcsin(np.minimum(1 / np.sqrt(a2), 1.0)))


def spheroid_capacity(r):
    """Newtonian capacity of {U >= r} for the disk: a confocal oblate spheroid, 2/(pi r)."""
    return 2 / (math.pi * r)
