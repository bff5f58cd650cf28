"""Base-4 path variables, two-point influence factors and influence paths."""
