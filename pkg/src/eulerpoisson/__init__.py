"""Numerical laboratory for the 1D Euler-Poisson ion system."""
