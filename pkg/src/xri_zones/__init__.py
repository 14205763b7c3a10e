"""Event-driven runtime for spatial zone agents."""

__version__ = "0.1.0"
