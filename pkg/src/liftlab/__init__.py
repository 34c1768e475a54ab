"""Numerical laboratory for steady 2D channel flow past convex bodies:
lift evaluation, zero-lift homotopies, and shape stability measures."""

__version__ = "0.1.0"
