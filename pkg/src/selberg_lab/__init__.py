"""Numerical laboratory for Selberg orthonormality and joint universality."""

__version__ = "0.1.0"
