"""Computable calculus on projective limits of manifolds."""

__version__ = "0.1.0"
