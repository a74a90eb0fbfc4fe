"""Inexact semismooth Newton-GMRES for semilinear elliptic control."""

__version__ = "0.1.0"
