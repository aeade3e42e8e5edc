"""Twisted L-values of half-integral weight modular forms, with the numerical
checks behind subconvexity by amplification."""

__version__ = "0.1.0"
