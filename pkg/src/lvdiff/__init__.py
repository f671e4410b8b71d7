"""Exact differential-algebra toolkit for planar polynomial vector fields."""
__version__ = "0.1.0"
