"""Stark-controlled atomic frequency comb quantum memory."""

__version__ = "0.1.0"
