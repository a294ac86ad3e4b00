"""Symbolic-numeric geometry of metrical multi-time Hamilton spaces on the dual 1-jet space."""

__version__ = "0.1.0"
