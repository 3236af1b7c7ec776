"""Adaptive run-count estimation for stochastic optimizer benchmarks and
learned reliability prediction for those estimates."""

__version__ = "0.1.0"
