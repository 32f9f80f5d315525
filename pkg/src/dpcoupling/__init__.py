"""Differential privacy verification by approximate probabilistic coupling."""

__version__ = "0.1.0"
