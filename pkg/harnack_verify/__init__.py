"""Mechanized checks of the matrix Harnack evolution equation under Ricci flow."""

__version__ = "0.1.0"
