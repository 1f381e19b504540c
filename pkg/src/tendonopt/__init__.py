"""Actuation-parameter optimization for tendon-driven underactuated hands."""

__version__ = "0.1.0"
