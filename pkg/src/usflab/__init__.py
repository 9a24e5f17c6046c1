"""Simulation and exact-verification toolkit for uniform spanning forests on Z^d."""

__version__ = "0.1.0"
