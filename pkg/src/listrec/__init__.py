"""Exact toolkit for list recovery of random low-rate linear codes over F_p."""

__version__ = "0.1.0"
