"""Quadrature helpers."""
