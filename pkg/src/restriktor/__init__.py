"""Numerical audit of a sharp restriction theorem for finite-type cones."""
__version__ = "0.1.0"
