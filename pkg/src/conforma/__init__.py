"""Exact computations with Lie conformal algebras."""

__version__ = "0.1.0"
