"""Exact finite-rank Bourgain-Delbaen spaces and their operators."""

__version__ = "0.1.0"
