"""Stochastic collapse-reliability analysis of wind-excited planar steel frames."""

__version__ = "0.1.0"
