"""Spectral solvers for Nekrasov-type steady periodic wave equations."""

__version__ = "0.1.0"
