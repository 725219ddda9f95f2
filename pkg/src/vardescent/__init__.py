"""Symbolic engine for multivalued Lagrangian cocycles and their variational descent."""

__version__ = "0.1.0"
