"""Spectral laboratory for dyadic-block diagnostics of degenerate fractional kinetic models."""

__version__ = "0.1.0"
