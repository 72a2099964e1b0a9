"""Ising Peeling - critical Ising triangulations with Dobrushin boundary."""

__version__ = "0.1.0"
