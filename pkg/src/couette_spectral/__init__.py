"""Spectral per-mode simulator for linearized compressible Couette flow."""

__version__ = "0.1.0"
