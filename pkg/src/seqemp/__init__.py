"""Sequential empirical processes of non-stationary arrays: simulation and inequality checks."""

__version__ = "0.1.0"
