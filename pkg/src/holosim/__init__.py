"""Simulation of holonomic single-qubit gates in Lambda and tripod systems
under decay, dephasing, detuning and field errors."""

__version__ = "0.1.0"
