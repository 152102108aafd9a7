"""Finite-dimensional laboratory for measurement schemes under conservation laws."""
__version__ = "0.1.0"
