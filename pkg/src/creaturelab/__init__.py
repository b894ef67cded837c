"""Desk-scale engine for creature-forcing combinatorics."""

__version__ = "0.1.0"
