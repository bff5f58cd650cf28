"""Readout of expectation values and the brute-force path-sum oracle."""
