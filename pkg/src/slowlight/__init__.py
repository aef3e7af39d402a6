"""Slow-light propagation of narrowband single photons in a two-line atomic vapour."""
__version__ = "0.1.0"
