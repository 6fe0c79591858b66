"""Explicit Anosov structures on the plane and numerical checks of their properties."""

__version__ = "0.1.0"
