"""Spherical 4R path synthesis with centre-of-mass acceleration balancing."""

__version__ = "0.1.0"
