"""Phase-space (CNC) tableau simulation of Pauli measurements and Clifford+T circuits."""

__version__ = "0.1.0"
