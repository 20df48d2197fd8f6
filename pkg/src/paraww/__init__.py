"""Pseudospectral toolkit for free-boundary Euler water waves with vorticity."""
from .grid import GridSpec

__version__ = "0.1.0"
__all__ = ["GridSpec"]
