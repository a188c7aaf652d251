"""wattflow: scalable power-consumption monitoring on an embedded message log."""

__version__ = "0.1.0"
