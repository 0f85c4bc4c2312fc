"""Affect recognition and emotion-aware scheduling for video ads."""

__version__ = "0.1.0"
