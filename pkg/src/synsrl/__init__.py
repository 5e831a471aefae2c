"""Span-based semantic role labeling with syntax-aware input representations."""

__version__ = "0.1.0"
