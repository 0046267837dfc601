"""Entanglement localization on small multi-qubit pure states."""

__version__ = "0.1.0"
