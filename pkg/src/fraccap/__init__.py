"""Fractional (1-Riesz) capacity of convex bodies: solvers and experiments."""

__version__ = "0.1.0"
