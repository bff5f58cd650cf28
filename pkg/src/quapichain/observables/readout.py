"""Expectation values and entanglement diagnostics of a density MPS.

Site r of the density MPS carries j = 2a + b for the matrix element
ρ[a, b] (a, b = 0 for spin up).  Tr(ρO) per site is therefore the sum over
j of ρ(j)·Oᵀ.ravel()[j]; the trace itself keeps j ∈ {0, 3}.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from quapichain.domain.models import SystemModel
from quapichain.tn.core import MPS, schmidt_at_bond

if TYPE_CHECKING:
    from quapichain.evolution.state import SystemState

logger = logging.getLogger(__name__)

REALIGNMENT_TOLERANCE = 1e-10

IDENTITY = np.eye(2, dtype=np.complex128)
PAULI: dict[str, np.ndarray] = {
    "I": IDENTITY,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_PAULI_TERM = re.compile(r"^([IXYZ])(\d+)$")
_PROB = re.compile(r"^prob:([+-]+)$")


def _rho_of(state: SystemState | MPS) -> MPS:
    return state if isinstance(state, MPS) else state.rho


def operator_weights(op: np.ndarray) -> np.ndarray:
    """Per-site contraction weights of a 2×2 operator."""
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (2, 2):
        raise ValueError(f"single-site operators must be 2x2, got shape {op.shape}")
    return op.T.ravel()


def _contract(rho: MPS, weights: Sequence[np.ndarray]) -> complex:
    left, right = rho.outer_dims
    if (left, right) != (1, 1):
        raise ValueError(f"density MPS must have trivial outer bonds, got {(left, right)}")
    vec = np.ones(1, dtype=np.complex128)
    for core, w in zip(rho.cores, weights):
        vec = vec @ np.einsum("ajb,j->ab", core, w)
    return complex(vec[0]) * math.exp(rho.log_norm)


def trace_rho(state: SystemState | MPS) -> complex:
    rho = _rho_of(state)
    return _contract(rho, [operator_weights(IDENTITY)] * rho.n_sites)


def expect_product(state: SystemState | MPS, ops: Mapping[int, np.ndarray]) -> complex:
    """Tr(ρ ⊗_r O_r)/Tr(ρ) with identity on sites not in *ops*."""
    rho = _rho_of(state)
    sites = sorted(ops)
    if sites:
        if sites[0] < 0 or sites[-1] >= rho.n_sites:
            raise IndexError(f"operator sites {sites} outside the chain of {rho.n_sites}")
        if sites != list(range(sites[0], sites[-1] + 1)):
            raise ValueError(f"operators must sit on contiguous sites, got {sites}")
    weights = [operator_weights(ops.get(r, IDENTITY)) for r in range(rho.n_sites)]
    return _contract(rho, weights) / trace_rho(rho)


def spin_config_prob(state: SystemState | MPS, config: Sequence[int]) -> float:
    """Probability of the classical z configuration *config* (±1 per site)."""
    rho = _rho_of(state)
    if len(config) != rho.n_sites:
        raise ValueError(f"config has {len(config)} spins for {rho.n_sites} sites")
    ops = {}
    for r, s in enumerate(config):
        if s not in (1, -1):
            raise ValueError(f"spins must be +1 or -1, got {s} at site {r}")
        ops[r] = (IDENTITY + s * PAULI["Z"]) / 2.0
    return expect_product(rho, ops).real


def energy_per_cell(state: SystemState | MPS, model: SystemModel, t: float) -> float:
    """Σ_r h_x⟨X_r⟩ + h_z⟨Z_r⟩ + J⟨Z_r Z_{r+1}⟩ at time *t*."""
    rho = _rho_of(state)
    hx, hz, jzz = model.fields_at(t)
    total = 0.0
    for r in range(model.n_sites):
        if hx[r]:
            total += hx[r] * expect_product(rho, {r: PAULI["X"]}).real
        if hz[r]:
            total += hz[r] * expect_product(rho, {r: PAULI["Z"]}).real
        if r < model.n_sites - 1 and jzz[r]:
            total += jzz[r] * expect_product(rho, {r: PAULI["Z"], r + 1: PAULI["Z"]}).real
    return total


@dataclass(frozen=True)
class RealignmentResult:
    """Normalized Schmidt sum across one bond.

    ``entangled`` is one-sided: a sum above one proves entanglement across
    the cut, a sum at or below one proves nothing.
    """

    bond: int
    schmidt_sum: float
    entangled: bool


def realignment_check(state: SystemState | MPS) -> list[RealignmentResult]:
    rho = _rho_of(state)
    trace = abs(trace_rho(rho))
    results = []
    for r in range(1, rho.n_sites):
        total = float(np.sum(schmidt_at_bond(rho, r))) / trace
        flagged = total > 1 + REALIGNMENT_TOLERANCE
        results.append(RealignmentResult(bond=r, schmidt_sum=total, entangled=flagged))
    return results


def rho_to_dense(state: SystemState | MPS) -> np.ndarray:
    """2^L × 2^L matrix with site 0 as the most significant bit."""
    rho = _rho_of(state)
    n = rho.n_sites
    if rho.outer_dims != (1, 1):
        raise ValueError("density MPS must have trivial outer bonds")
    t = rho.cores[0]
    for c in rho.cores[1:]:
        t = np.tensordot(t, c, axes=([-1], [0]))
    t = t.reshape((2, 2) * n) * math.exp(rho.log_norm)
    # axes (a0, b0, a1, b1, ...) -> rows a, cols b
    t = t.transpose([2 * i for i in range(n)] + [2 * i + 1 for i in range(n)])
    return t.reshape(2**n, 2**n)


# ── Config labels ───────────────────────────────────────────────────
Observable = Callable[["SystemState | MPS", SystemModel, float], float]


def parse_observable(label: str, n_sites: int) -> Observable:
    """Turn a config label (``"Z0"``, ``"X0 X1"``, ``"energy"``, ``"prob:+-"``,
    ``"trace"``) into a function of (state, model, t)."""
    text = label.strip()
    if text == "trace":
        return lambda state, model, t: trace_rho(state).real
    if text == "energy":
        return energy_per_cell

    prob = _PROB.match(text)
    if prob:
        config = [1 if c == "+" else -1 for c in prob.group(1)]
        if len(config) != n_sites:
            raise ValueError(f"{label!r} lists {len(config)} spins for {n_sites} sites")
        return lambda state, model, t: spin_config_prob(state, config)

    ops: dict[int, np.ndarray] = {}
    for term in text.split():
        m = _PAULI_TERM.match(term)
        if not m:
            raise ValueError(f"cannot parse observable {label!r}")
        site = int(m.group(2))
        if site >= n_sites:
            raise ValueError(f"{label!r} refers to site {site} of a {n_sites}-site chain")
        if site in ops:
            raise ValueError(f"{label!r} names site {site} twice")
        ops[site] = PAULI[m.group(1)]
    if not ops:
        raise ValueError("empty observable label")
    for site in range(min(ops), max(ops)):
        ops.setdefault(site, IDENTITY)
    return lambda state, model, t: expect_product(state, ops).real
