"""Extremal index estimation for regularly varying time series."""

__version__ = "0.1.0"
