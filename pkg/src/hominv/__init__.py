"""Local-unitary invariants of two-qubit states and their interferometric estimation."""

__version__ = "0.1.0"
