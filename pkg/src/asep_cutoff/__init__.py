"""Mixing-time cutoff experiments for ASEP on a segment."""

__version__ = "0.1.0"
