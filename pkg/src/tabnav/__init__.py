"""Tabular reinforcement learning for navigation and decision-making studies."""

__version__ = "0.1.0"
