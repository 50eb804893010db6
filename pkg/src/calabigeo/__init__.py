"""Invariants, parallelism checks and pointwise classification for Calabi hypersurfaces."""

__version__ = "0.1.0"
