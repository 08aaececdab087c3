"""Minimal dynamical semigroups of an open boson mode via regularised gain terms."""

__version__ = "0.1.0"
