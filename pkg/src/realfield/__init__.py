"""Particles sampled from real, unitarily evolving optical fields."""

__version__ = "0.1.0"
