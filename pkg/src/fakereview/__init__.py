"""Fake review detection: corpus handling, behavioral/contextual features,
from-scratch classifiers and cross-validated evaluation."""

__version__ = "0.1.0"
