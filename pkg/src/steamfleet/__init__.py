"""Hierarchical load sharing and pressure control for boiler fleets."""

__version__ = "0.1.0"
