"""Spectral densities, bath correlation functions and the eta memory kernels."""
