"""Reduced density matrix evolution.

:class:`SystemState` owns the per-site influence paths, the ⊢ checkpoint
and the current density MPS.  One call to :meth:`SystemState.evolve_step`
advances ρ from step n to n+1:

1. every bulk path is advanced to slice (n+1)Δm − 1 and a terminal copy is
   closed with the finite-n factors;
2. the ⊢ checkpoint is moved up to the first live slice (long times) or
   the initial state is taken as it is (short times);
3. the step-n MPOs are applied one per time step, with compression after
   each application.
"""

from __future__ import annotations

import json
import logging
import math
import tempfile
import time
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict

from quapichain.bath.eta import k_tau, warm_eta_caches
from quapichain.domain.models import (
    NAMED_SPINORS,
    BathModel,
    InitialState,
    InitialStateKind,
    RunParams,
    SystemModel,
)
from quapichain.errors import StateError
from quapichain.evolution.transfer import TransferKind, build_transfer_mpo
from quapichain.influence.path import InfluencePath, TerminalPath
from quapichain.influence.twopt import SiteContext, build_site_context
from quapichain.observables.readout import rho_to_dense, trace_rho
from quapichain.tn.core import MPO, MPS, apply_and_compress, norm

logger = logging.getLogger(__name__)

SNAPSHOT_VERSION = 1
TRACE_DRIFT_WARNING = 1e-6

T = TypeVar("T")
R = TypeVar("R")


# ── Initial state ───────────────────────────────────────────────────
def _spinor(entry: str | list[list[float]]) -> np.ndarray:
    if isinstance(entry, str):
        return np.array(NAMED_SPINORS[entry], dtype=np.complex128)
    return np.array([complex(re, im) for re, im in entry], dtype=np.complex128)


def initial_state_mps(spec: InitialState, n_sites: int, seed: int = 0) -> MPS:
    """Pure state ψ of the chain as an MPS with physical dimension 2."""
    if spec.kind is InitialStateKind.PRODUCT:
        if not spec.states:
            return MPS.product([np.array([1.0, 0.0])] * n_sites)
        if len(spec.states) != n_sites:
            raise ValueError(f"initial state lists {len(spec.states)} spinors for {n_sites} sites")
        return MPS.product([_spinor(s) for s in spec.states])

    if spec.kind is InitialStateKind.RANDOM_PRODUCT:
        rng = np.random.default_rng(seed)
        vectors = []
        for _ in range(n_sites):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            vectors.append(v / np.linalg.norm(v))
        return MPS.product(vectors)

    path = Path(spec.path)  # type: ignore[arg-type]
    if not path.exists():
        raise FileNotFoundError(f"initial state file not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        cores = [data[f"core_{i}"] for i in range(n_sites) if f"core_{i}" in data]
    if len(cores) != n_sites:
        raise ValueError(f"{path} holds {len(cores)} cores, expected core_0..core_{n_sites - 1}")
    psi = MPS(tuple(cores))
    if psi.phys_dims != [2] * n_sites or psi.outer_dims != (1, 1):
        raise ValueError(f"{path} is not a spin-1/2 MPS with trivial outer bonds")
    return psi


def init_density_mps(psi: MPS) -> MPS:
    """ρ = |ψ⟩⟨ψ| with base-4 index j = 2a + b ↔ ψ(a)·ψ*(b)."""
    if any(d != 2 for d in psi.phys_dims):
        raise ValueError(f"expected spin-1/2 sites, got physical dims {psi.phys_dims}")
    nrm = norm(psi)
    if nrm == 0.0 or not math.isfinite(nrm):
        raise ValueError("initial state has zero or non-finite norm")
    if abs(nrm - 1.0) > 1e-10:
        logger.warning("initial state has norm %.12g, renormalizing", nrm)
    cores = []
    for c in psi.cores:
        left, _, right = c.shape
        doubled = np.einsum("apb,cqd->acpqbd", c, c.conj())
        cores.append(doubled.reshape(left * left, 4, right * right))
    return MPS(tuple(cores), 2.0 * (psi.log_norm - math.log(nrm)))


# ── Run records ─────────────────────────────────────────────────────
class StepRecord(BaseModel):
    """Diagnostics of one evolution step, as written to the run report."""

    model_config = ConfigDict(frozen=True)

    n: int
    t: float
    discarded_weight: float
    max_rho_bond: int
    max_influence_bond: int
    trace: float
    wall_time: float


# ── State ───────────────────────────────────────────────────────────
class SystemState:
    """Reduced density matrix after ``n`` steps plus what later steps need."""

    def __init__(
        self,
        model: SystemModel,
        bath: BathModel,
        params: RunParams,
        psi: MPS | None = None,
        *,
        threads: int = 1,
    ) -> None:
        if model.n_sites != bath.n_sites:
            raise ValueError("model and bath disagree on the number of sites")
        self.model = model
        self.bath = bath
        self.params = params
        self.dt = params.dt
        self.threads = threads
        self.delta_m = bath.uniform_delta_m()
        self.k_tau = k_tau(bath.tau, self.dt)
        warm_eta_caches(bath, self.dt, threads)
        self.contexts: list[SiteContext] = [
            build_site_context(model, bath, self.dt, r) for r in range(model.n_sites)
        ]
        self.paths = [InfluencePath(ctx, params.compression) for ctx in self.contexts]
        if psi is None:
            psi = initial_state_mps(params.initial_state, model.n_sites, params.seed)
        self.rho_initial = init_density_mps(psi)
        self.rho = self.rho_initial
        self.n = 0
        self.checkpoints: dict[int, MPS] = {}
        self.history: list[StepRecord] = []

    @property
    def t(self) -> float:
        return self.n * self.dt

    @property
    def n_sites(self) -> int:
        return self.model.n_sites

    def bond_profile(self) -> list[int]:
        return self.rho.bond_dims

    def max_influence_bond(self) -> int:
        return max(p.window.max_bond() for p in self.paths)

    def rho_dense(self) -> np.ndarray:
        return rho_to_dense(self.rho)

    def _map(self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if self.threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=min(self.threads, len(items))) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    def _apply(self, mpo: MPO, rho: MPS) -> tuple[MPS, float]:
        return apply_and_compress(mpo, rho, self.params.compression)

    def _mpo(
        self,
        kind: TransferKind,
        sources: Sequence[InfluencePath | TerminalPath],
        n: int | None = None,
        k: int | None = None,
    ) -> MPO:
        return build_transfer_mpo(kind, sources, self.model, self.dt, self.delta_m, n=n, k=k)

    # ── ⊢ branch ────────────────────────────────────────────────────
    def _advance_checkpoint(self, mu: int) -> tuple[MPS, float]:
        """ρ⊢ at slice *mu*, built from the archived bulk nodes."""
        lost = 0.0
        if not self.checkpoints:
            mpo = self._mpo(TransferKind.VDASH_I, self.paths)
            first, dropped = self._apply(mpo, self.rho_initial)
            self.checkpoints[1] = first
            lost += dropped
        m = max(self.checkpoints)
        if m > mu:
            raise StateError(f"checkpoint at slice {m} is past the requested slice {mu}")
        rho = self.checkpoints[m]
        while m < mu:
            k = (m - 1) // self.delta_m
            rho, dropped = self._apply(self._mpo(TransferKind.VDASH_K, self.paths, k=k), rho)
            lost += dropped
            m += self.delta_m
        if m != mu:
            raise StateError(f"checkpoint walk overshot slice {mu} (reached {m})")
        self.checkpoints = {m: rho}
        for path in self.paths:
            path.release_before(m)
        return rho, lost

    # ── Step ────────────────────────────────────────────────────────
    def evolve_step(self) -> StepRecord:
        """Advance ρ by one time step."""
        started = time.perf_counter()
        n = self.n + 1
        dm = self.delta_m
        before = sum(p.discarded for p in self.paths)

        self._map(lambda p: p.advance_to(n * dm - 1), self.paths)
        terminals: list[TerminalPath] = self._map(lambda p: p.finalize(n), self.paths)
        lost = sum(p.discarded for p in self.paths) - before

        if n >= self.k_tau:
            rho, dropped = self._advance_checkpoint((n - self.k_tau) * dm + 1)
            k0 = n - self.k_tau
        else:
            mpo = self._mpo(TransferKind.N_I, terminals, n=n)
            rho, dropped = self._apply(mpo, self.rho_initial)
            k0 = 0
        lost += dropped
        for k in range(k0, n):
            rho, dropped = self._apply(self._mpo(TransferKind.N_K, terminals, n=n, k=k), rho)
            lost += dropped
        rho, dropped = self._apply(self._mpo(TransferKind.N_F, terminals, n=n), rho)
        lost += dropped

        self.rho = rho.replace(rho.cores, rho.log_norm + sum(t.log_scale for t in terminals))
        self.n = n
        trace = trace_rho(self.rho)
        if abs(trace - 1.0) > TRACE_DRIFT_WARNING:
            logger.warning("step %d: trace drifted to %.12g%+.3gj", n, trace.real, trace.imag)
        record = StepRecord(
            n=n,
            t=self.t,
            discarded_weight=lost,
            max_rho_bond=self.rho.max_bond(),
            max_influence_bond=self.max_influence_bond(),
            trace=trace.real,
            wall_time=time.perf_counter() - started,
        )
        self.history.append(record)
        logger.info(
            "step %d t=%.6g max_bond=%d discarded=%.3e",
            n,
            record.t,
            record.max_rho_bond,
            record.discarded_weight,
        )
        return record

    def evolve(self, n_steps: int, on_step: Callable[[SystemState], None] | None = None) -> None:
        for _ in range(n_steps):
            self.evolve_step()
            if on_step is not None:
                on_step(self)

    # ── Snapshots ───────────────────────────────────────────────────
    def to_snapshot(
        self, path: Path, *, fingerprint: str = "", extra: dict | None = None
    ) -> Path:
        """Write a versioned ``.npz`` snapshot atomically."""
        arrays: dict[str, np.ndarray] = {}
        _put_mps(arrays, "rho", self.rho)
        _put_mps(arrays, "rho0", self.rho_initial)
        checkpoint_slice = None
        if self.checkpoints:
            checkpoint_slice, checkpoint = next(iter(self.checkpoints.items()))
            _put_mps(arrays, "vdash", checkpoint)
        paths = []
        for r, p in enumerate(self.paths):
            for m, node in p.archived.items():
                arrays[f"path{r}_arch_{m}"] = node
            for i, core in enumerate(p.window.cores):
                arrays[f"path{r}_win_{i}"] = core
            paths.append(
                {
                    "start": p.start,
                    "m2": p.m2,
                    "discarded": p.discarded,
                    "log_norm": p.window.log_norm,
                    "archived": sorted(p.archived),
                    "window": p.window.n_sites,
                }
            )
        header = {
            "version": SNAPSHOT_VERSION,
            "fingerprint": fingerprint,
            "dt": self.dt,
            "n": self.n,
            "K_tau": self.k_tau,
            "delta_m": self.delta_m,
            "L": self.n_sites,
            "rho": {"n_cores": self.rho.n_sites, "log_norm": self.rho.log_norm},
            "rho0": {"n_cores": self.rho_initial.n_sites, "log_norm": self.rho_initial.log_norm},
            "checkpoint": None if checkpoint_slice is None else {
                "slice": checkpoint_slice,
                "log_norm": self.checkpoints[checkpoint_slice].log_norm,
            },
            "paths": paths,
            "history": [r.model_dump() for r in self.history],
            "extra": extra or {},
        }
        arrays["header"] = np.array(json.dumps(header, sort_keys=True))

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = tempfile.NamedTemporaryFile(mode="wb", dir=path.parent, suffix=".tmp", delete=False)
        try:
            with tmp:
                np.savez_compressed(tmp, **arrays)
            Path(tmp.name).replace(path)
        except Exception:
            Path(tmp.name).unlink(missing_ok=True)
            raise
        logger.debug("wrote snapshot %s at n=%d", path, self.n)
        return path

    @classmethod
    def from_snapshot(
        cls,
        path: Path,
        model: SystemModel,
        bath: BathModel,
        params: RunParams,
        *,
        fingerprint: str = "",
        threads: int = 1,
    ) -> tuple[SystemState, dict]:
        """Restore a state written by :meth:`to_snapshot`; returns it with the extra payload."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"snapshot not found: {path}")
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            if header.get("version") != SNAPSHOT_VERSION:
                raise StateError(
                    f"snapshot version {header.get('version')} is not {SNAPSHOT_VERSION}"
                )
            if fingerprint and header.get("fingerprint") != fingerprint:
                raise StateError("snapshot was written for a different configuration")
            if header["L"] != model.n_sites or not math.isclose(header["dt"], params.dt):
                raise StateError("snapshot chain length or dt does not match the configuration")

            state = cls(model, bath, params, _placeholder_psi(model.n_sites), threads=threads)
            if header["K_tau"] != state.k_tau or header["delta_m"] != state.delta_m:
                raise StateError("snapshot memory layout does not match the configuration")
            state.n = header["n"]
            state.rho = _get_mps(data, "rho", header["rho"])
            state.rho_initial = _get_mps(data, "rho0", header["rho0"])
            if header["checkpoint"] is not None:
                cp = header["checkpoint"]
                state.checkpoints = {
                    cp["slice"]: _get_mps(data, "vdash", {"n_cores": model.n_sites, **cp})
                }
            for r, (p, meta) in enumerate(zip(state.paths, header["paths"])):
                p.archived = {m: np.array(data[f"path{r}_arch_{m}"]) for m in meta["archived"]}
                p.window = MPS(
                    tuple(data[f"path{r}_win_{i}"] for i in range(meta["window"])),
                    meta["log_norm"],
                )
                p.start = meta["start"]
                p.m2 = meta["m2"]
                p.discarded = meta["discarded"]
            state.history = [StepRecord(**r) for r in header["history"]]
        logger.info("resumed from %s at n=%d", path, state.n)
        return state, header["extra"]


def _placeholder_psi(n_sites: int) -> MPS:
    return MPS.product([np.array([1.0, 0.0])] * n_sites)


def _put_mps(arrays: dict[str, np.ndarray], prefix: str, s: MPS) -> None:
    for i, core in enumerate(s.cores):
        arrays[f"{prefix}_{i}"] = core


def _get_mps(data: Mapping[str, np.ndarray], prefix: str, meta: dict) -> MPS:
    return MPS(tuple(data[f"{prefix}_{i}"] for i in range(meta["n_cores"])), meta["log_norm"])

