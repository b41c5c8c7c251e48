"""Exact sheaf computations for geodesic-flow kernels on spheres and CP^1."""

from sheafflow.linalg import F2, PrimeField, Rationals, SparseMatrix, field_from_name

__all__ = ["F2", "PrimeField", "Rationals", "SparseMatrix", "field_from_name"]
__version__ = "0.1.0"
