"""Numerical laboratory for lambda-hypersurfaces."""

__version__ = "0.1.0"
