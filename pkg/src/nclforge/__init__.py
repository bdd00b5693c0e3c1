"""Constraint logic games and their reductions to solitaire and board games."""

__version__ = "0.1.0"
