"""Pseudospectral simulation and verification suite for the quantum-KP
limit of the 2D quantum Euler-Poisson system."""

from .spectral import Grid2D, RealField2D

__all__ = ["Grid2D", "RealField2D"]
__version__ = "0.1.0"
