"""Discrete partial-edge dislocation models on the square lattice."""

__version__ = "0.1.0"
