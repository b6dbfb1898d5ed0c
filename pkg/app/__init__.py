"""Aharonov-Bohm inhomogeneous NLS laboratory."""

__version__ = "1.0.0"
