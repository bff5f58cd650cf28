"""Driven transverse-field Ising chains with bosonic baths, simulated by tensor networks."""

__version__ = "0.1.0"


def main() -> int:
    from quapichain.cli import main as cli_main

    return cli_main()
