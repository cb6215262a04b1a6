"""Differentiable Cartesian Genetic Programming."""

__version__ = "0.1.0"
