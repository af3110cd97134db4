"""Splitting finite element solver for Darcy flow with pressure-dependent permeability."""
__version__ = "0.1.0"
