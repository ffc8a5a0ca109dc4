"""Pseudospectral toolkit for the isothermal Navier-Stokes-Korteweg system with Gevrey diagnostics."""

__version__ = "0.1.0"
