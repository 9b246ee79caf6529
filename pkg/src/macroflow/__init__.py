"""Macroscopic traffic flow models and their finite-volume solvers."""

__version__ = "0.1.0"
