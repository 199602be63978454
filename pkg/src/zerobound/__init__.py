"""Oscillation bounds for linear ODE systems via reduction to scalar equations."""

__version__ = "0.1.0"
