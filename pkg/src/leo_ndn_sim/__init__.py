"""Discrete-event simulation of NDN gateway mobility over a LEO constellation."""

__version__ = "0.1.0"
