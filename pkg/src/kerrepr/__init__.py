"""Kerr-microresonator OPO quantum-noise and EPR-entanglement simulator."""

__version__ = "0.1.0"
