"""Adaptive confidence intervals for linear functionals in Gaussian noise."""

__version__ = "0.1.0"
