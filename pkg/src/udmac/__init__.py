"""Geometry, contention model and simulator for a UAV store-carry-and-forward MAC."""
__version__ = "0.1.0"
