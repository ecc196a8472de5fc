"""Spanning trees of random regular graphs: exact moments, cycle constants,
saddle-point asymptotics and Monte Carlo checks."""

__version__ = "0.1.0"
