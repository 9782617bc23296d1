"""Pseudo-spectral simulator and modulus-of-continuity certifier for generalized QG flows on the torus."""

__version__ = "0.1.0"
