"""Command-line front end.

Usage::

    quapichain run --config rabi.json --out runs/rabi
    quapichain validate --config rabi.json
    quapichain bath-info --config ohmic.json --out runs/ohmic
    quapichain eta-dump --config ohmic.json --out runs/ohmic
    quapichain brute --config small.json --steps 2 --compare runs/small/rho.csv

Exit status is 0 on success, 1 for usage and configuration problems and 2
when the numerics fail.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from quapichain.bath.eta import cache_index_map, get_eta_caches, k_tau
from quapichain.bath.spectral import bath_correlation, sample_spectral_density
from quapichain.config import get_settings
from quapichain.domain.artifacts import read_rho_csv, write_csv, write_report, write_rho_csv
from quapichain.domain.models import Axis, RunConfig
from quapichain.domain.parsing import format_validation_error, load_config
from quapichain.errors import NumericalError, QuadratureError, StateError
from quapichain.evolution.state import SystemState, initial_state_mps
from quapichain.observables.oracle import brute_force_rho
from quapichain.observables.readout import parse_observable

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

CONFIG_ERRORS = (ValidationError, ValueError, FileNotFoundError, StateError)
NUMERIC_ERRORS = (QuadratureError, NumericalError, np.linalg.LinAlgError, FloatingPointError)

# dense ρ is only written for chains up to this length
RHO_CSV_MAX_SITES = 8
SPECTRAL_SAMPLES = 201


# ── Parser ──────────────────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, metavar="PATH", help="Run file.")
    common.add_argument("--out", type=Path, default=None, metavar="DIR", help="Output directory.")
    common.add_argument("--threads", type=int, default=None, metavar="N", help="Worker threads.")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")

    parser = argparse.ArgumentParser(
        prog="quapichain",
        description="Path-integral tensor-network dynamics of driven Ising chains with baths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Evolve and write observables.")
    run.add_argument("--checkpoint", type=Path, default=None, metavar="PATH")
    run.add_argument("--resume", type=Path, default=None, metavar="PATH")

    sub.add_parser("validate", parents=[common], help="Check a run file.")
    sub.add_parser("bath-info", parents=[common], help="Spectral densities and C(t).")
    sub.add_parser("eta-dump", parents=[common], help="Write the cached eta values.")

    brute = sub.add_parser("brute", parents=[common], help="Brute-force path sum.")
    brute.add_argument("--steps", type=int, default=None, metavar="N")
    brute.add_argument("--compare", type=Path, default=None, metavar="PATH")
    return parser


def _out_dir(args: argparse.Namespace) -> Path:
    return args.out if args.out is not None else get_settings().quapichain_out_dir


def _threads(args: argparse.Namespace) -> int:
    threads = args.threads if args.threads is not None else get_settings().quapichain_threads
    if threads < 1:
        raise ValueError(f"--threads must be >= 1, got {threads}")
    return threads


def _noisy_channels(config: RunConfig) -> list[tuple[Axis, int]]:
    bath = config.bath
    return [(nu, r) for nu in Axis for r in range(bath.n_sites) if bath.has_noise(nu, r)]


# ── Subcommands ─────────────────────────────────────────────────────
def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    for label in config.observables:
        parse_observable(label, config.model.n_sites)
    print(
        f"{args.config}: ok (L={config.model.n_sites}, "
        f"delta_m={config.bath.uniform_delta_m()}, "
        f"K_tau={k_tau(config.bath.tau, config.run.dt)})"
    )
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    settings = get_settings()
    out = _out_dir(args)
    threads = _threads(args)
    observables = [parse_observable(label, config.model.n_sites) for label in config.observables]
    fingerprint = config.fingerprint()

    def observe(s: SystemState) -> list[float]:
        return [s.t, *(obs(s, config.model, s.t) for obs in observables)]

    if args.resume is not None:
        state, extra = SystemState.from_snapshot(
            args.resume,
            config.model,
            config.bath,
            config.run,
            fingerprint=fingerprint,
            threads=threads,
        )
        rows: list[list[float]] = extra.get("rows", [])
    else:
        state = SystemState(config.model, config.bath, config.run, threads=threads)
        rows = [observe(state)]

    started = time.perf_counter()
    every = settings.quapichain_snapshot_every
    try:
        while state.n < config.run.n_steps:
            state.evolve_step()
            rows.append(observe(state))
            if args.checkpoint is not None and every and state.n % every == 0:
                state.to_snapshot(args.checkpoint, fingerprint=fingerprint, extra={"rows": rows})
    except NUMERIC_ERRORS as exc:
        logger.error("numeric failure at step %d: %s", state.n + 1, exc)
        raise

    write_csv(out / "observables.csv", ["t", *config.observables], rows)
    if config.model.n_sites <= RHO_CSV_MAX_SITES:
        write_rho_csv(out / "rho.csv", state.rho_dense())
    write_report(out / "report.json", _report(config, state, time.perf_counter() - started))
    if args.checkpoint is not None:
        state.to_snapshot(args.checkpoint, fingerprint=fingerprint, extra={"rows": rows})
    logger.info("run finished: %d steps written to %s", state.n, out)
    return EXIT_OK


def _report(config: RunConfig, state: SystemState, wall_time: float) -> dict[str, Any]:
    return {
        "fingerprint": config.fingerprint(),
        "seed": config.run.seed,
        "dt": config.run.dt,
        "n_steps": state.n,
        "K_tau": state.k_tau,
        "delta_m": state.delta_m,
        "observables": list(config.observables),
        "bond_profile": state.bond_profile(),
        "total_discarded_weight": sum(r.discarded_weight for r in state.history),
        "wall_time": wall_time,
        "steps": [r.model_dump() for r in state.history],
    }


def cmd_bath_info(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    bath = config.bath
    out = _out_dir(args)
    channels = _noisy_channels(config)
    labels = [f"{nu.value}{r}" for nu, r in channels]

    w_max = max(
        (c.w_uv for nu, r in channels for c in bath.components(nu, r)),
        default=1.0,
    )
    positive = np.linspace(0.0, w_max, SPECTRAL_SAMPLES)
    omegas = np.concatenate([-positive[:0:-1], positive])
    columns = [sample_spectral_density(bath, nu, r, omegas) for nu, r in channels]
    write_csv(
        out / "bath_spectral.csv",
        ["omega", *(f"A_{label}" for label in labels)],
        [[w, *(col[i] for col in columns)] for i, w in enumerate(omegas)],
    )

    dt = config.run.dt
    half_steps = 2 * k_tau(bath.tau, dt) + 2
    rows = []
    for l in range(half_steps):  # noqa: E741
        t = 0.5 * l * dt
        row: list[float] = [t]
        for nu, r in channels:
            c = bath_correlation(bath, nu, r, t)
            row.extend([c.real, c.imag])
        rows.append(row)
    header = ["t"]
    for label in labels:
        header.extend([f"re_C_{label}", f"im_C_{label}"])
    write_csv(out / "bath_correlation.csv", header, rows)
    print(f"wrote {out / 'bath_spectral.csv'} and {out / 'bath_correlation.csv'}")
    return EXIT_OK


def cmd_eta_dump(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    bath, dt = config.bath, config.run.dt
    out = _out_dir(args)
    rows = []
    for nu, r in _noisy_channels(config):
        caches = get_eta_caches(bath, nu, r, dt)
        slots = cache_index_map(caches.k_tau)
        for name, arr in caches.arrays().items():
            for a, value in enumerate(arr):
                n, l1, l2 = slots[name][a]
                rows.append([nu.value, r, name, a, n, l1, l2, value.real, value.imag])
    header = ["axis", "site", "cache", "index", "n", "l1", "l2", "re", "im"]
    write_csv(out / "eta_caches.csv", header, rows)
    print(f"wrote {len(rows)} eta values to {out / 'eta_caches.csv'}")
    return EXIT_OK


def cmd_brute(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run = config.run
    steps = args.steps if args.steps is not None else run.n_steps
    out = _out_dir(args)
    psi = initial_state_mps(run.initial_state, config.model.n_sites, run.seed)
    rho = brute_force_rho(
        config.model, config.bath, steps, run.dt, psi, memory_window=run.memory_window
    )
    write_rho_csv(out / "brute_rho.csv", rho)
    report: dict[str, Any] = {
        "fingerprint": config.fingerprint(),
        "steps": steps,
        "trace": [rho.trace().real, rho.trace().imag],
    }
    if args.compare is not None:
        other = read_rho_csv(args.compare)
        if other.shape != rho.shape:
            raise ValueError(f"{args.compare} holds a {other.shape} matrix, expected {rho.shape}")
        diff = float(np.max(np.abs(other - rho)))
        report["max_abs_diff"] = diff
        print(f"max |rho_tn - rho_brute| = {diff:.3e}")
    write_report(out / "brute_report.json", report)
    print(f"wrote {out / 'brute_rho.csv'}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "bath-info": cmd_bath_info,
    "eta-dump": cmd_eta_dump,
    "brute": cmd_brute,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or get_settings().quapichain_log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        for line in format_validation_error(exc):
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
