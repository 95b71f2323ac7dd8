"""Semiclassical 1-D scattering, resonances and truncation-stability checks."""

__version__ = "0.1.0"
