"""Construction and verification of trios of compatible Hamiltonian operators."""

__version__ = "0.1.0"
