"""Numerical verification of Kähler immersions into products of two space forms."""

__version__ = "0.1.0"
