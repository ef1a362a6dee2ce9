"""Blur-kernel estimation for unlabeled image corpora by frequency-density consistency."""

__version__ = "0.1.0"
