"""Stable forms, G2 structures and associative-graph geometry in dimensions 6 and 7."""

__version__ = "0.1.0"
