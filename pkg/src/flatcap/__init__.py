"""Turing patterns on a slowly flattening spherical cap: special functions,
geometry, Brusselator kinetics, centre-manifold reduction, normal-form
integration and a disk-chart simulator."""

__version__ = "0.1.0"
