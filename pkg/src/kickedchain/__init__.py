"""Kicked spin chain simulator with chaotic torus kick baths."""

__version__ = "0.1.0"
