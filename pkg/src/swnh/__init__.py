"""Projection-correction finite-volume solver for depth-averaged non-hydrostatic flows."""

__version__ = "0.1.0"
