"""Run models, time-dependent scalars, Trotter weights, config parsing and artifacts."""
