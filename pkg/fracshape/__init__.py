# fracshape/__init__.py
"""Numerical laboratory for spectral shape optimization under the fractional Dirichlet Laplacian."""

__version__ = "1.0.0"
