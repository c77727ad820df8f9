"""Basis-independent Wigner negativity of sets of qubit states and measurements."""

__version__ = "0.1.0"
