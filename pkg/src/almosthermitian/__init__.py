"""Numerical almost Hermitian geometry on single charts."""

__version__ = "0.1.0"
