"""Curvature and Ricci solitons for f-left-invariant metrics on Lie groups."""

__version__ = "0.1.0"
