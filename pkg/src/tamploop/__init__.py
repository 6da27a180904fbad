"""Closed-loop task planning and execution with a stochastic household simulator."""

__version__ = "0.1.0"
