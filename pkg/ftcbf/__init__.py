"""Finite-time control barrier function synthesis for multi-agent reachability tasks."""

__version__ = "1.0.0"
