"""Hankel operators: kernels, fast sections, singular values, and dyadic functionals."""

__version__ = "0.1.0"
