"""Rewriting for graded linear diagram categories, with a gl2 web instance."""

__version__ = "0.1.0"
