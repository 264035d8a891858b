"""Fractal dimensions of Weierstrass-type states in the infinite square well."""

__version__ = "0.1.0"
