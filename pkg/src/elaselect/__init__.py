"""Landscape-aware performance regression and algorithm selection toolkit."""

__version__ = "0.1.0"
