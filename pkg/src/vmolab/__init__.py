"""Numerical laboratory for BMO/VMO spaces of the Neumann Laplacian."""

__version__ = "0.1.0"
