"""Uniform grids and finite-difference operators."""
