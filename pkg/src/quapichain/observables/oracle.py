"""Brute-force reduced density matrix by direct path summation.

Every spin path variable of every site becomes an einsum index; each
factor of the discretized path integral (basis changes, transverse-field
propagators, bath kernels, slice phases, the initial state) is one
operand.  Bath kernels come straight from :func:`eta_direct`, one per pair
of half-steps.  ``numpy.einsum`` with a greedy contraction order then performs
the full sum exactly.  Nothing here goes through influence windows or
compressed tensor networks, so the result checks them independently.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from quapichain.bath.eta import eta_direct, k_tau
from quapichain.config import get_settings
from quapichain.domain.models import Axis, BathModel, SystemModel
from quapichain.evolution.phase import phase_scalar
from quapichain.influence.base4 import slice_of
from quapichain.influence.twopt import (
    SiteContext,
    YZDirection,
    build_site_context,
    two_point_tfc,
    two_point_yz,
)
from quapichain.tn.core import MPS, to_dense

logger = logging.getLogger(__name__)

# numpy.einsum accepts at most 52 distinct labels
MAX_EINSUM_LABELS = 52


@dataclass
class _FactorGraph:
    """Operands and integer labels in ``numpy.einsum`` interleaved form."""

    operands: list[object] = field(default_factory=list)
    n_labels: int = 0

    def new_labels(self, count: int) -> list[int]:
        start = self.n_labels
        self.n_labels += count
        return list(range(start, start + count))

    def add(self, tensor: np.ndarray, labels: list[int]) -> None:
        self.operands.extend([tensor, labels])


def _pair_table(fn: Callable[[int, int], complex]) -> np.ndarray:
    return np.array([[fn(j1, j2) for j2 in range(4)] for j1 in range(4)], dtype=np.complex128)


def path_variable_count(n_sites: int, n: int, delta_m: int) -> int:
    per_site = (n + 2) + (2 * n + 2 if delta_m == 3 else 0)
    return n_sites * per_site


def _check_guard(n_sites: int, n: int, delta_m: int) -> None:
    s = get_settings()
    variables = path_variable_count(n_sites, n, delta_m)
    within = n_sites <= s.quapichain_brute_max_sites and n <= s.quapichain_brute_max_steps
    if within and variables <= MAX_EINSUM_LABELS:
        return
    raise ValueError(
        f"brute force refused for L={n_sites}, n={n}: limits are "
        f"L <= {s.quapichain_brute_max_sites}, n <= {s.quapichain_brute_max_steps}; "
        f"the sum would run over 4^{variables} ≈ {4.0**variables:.3g} paths"
    )


def _initial_tensor(psi: MPS) -> np.ndarray:
    """ρ_i as a tensor with one base-4 index per site."""
    vec = to_dense(psi).reshape(-1)
    rho = np.outer(vec, vec.conj())
    n = psi.n_sites
    t = rho.reshape((2,) * (2 * n))
    t = t.transpose([i // 2 + (i % 2) * n for i in range(2 * n)])
    return t.reshape((4,) * n) / np.trace(rho)


def _phase_tensor(model: SystemModel, n: int, k: int, dt: float) -> np.ndarray:
    shape = (4,) * model.n_sites
    out = np.empty(shape, dtype=np.complex128)
    for config in itertools.product(range(4), repeat=model.n_sites):
        out[config] = phase_scalar(model, n, k, config, dt)
    return out


# base-4 index j = 2a + b packs (σ⁺, σ⁻) = (1 − 2a, 1 − 2b)
_SIGMA_PLUS = np.array([1.0, 1.0, -1.0, -1.0])
_SIGMA_MINUS = np.array([1.0, -1.0, 1.0, -1.0])


def _half_step_variable(axis: Axis, l: int) -> int:  # noqa: E741
    """Path variable carrying half-step *l* on *axis*."""
    if axis is Axis.Y:
        return l
    # z₀ holds l = 0, z_k holds 2k−1 and 2k, z_{n+1} holds 2n+1
    return (l + 1) // 2


def _add_bath(
    graph: _FactorGraph,
    ctx: SiteContext,
    axis: Axis,
    n: int,
    labels: list[int],
    memory_window: bool,
) -> None:
    """Influence factors of one axis, summed over half-step pairs l₁ ≤ l₂.

    Each pair contributes (σ⁺−σ⁻)_{l₂}·[(σ⁺−σ⁻)_{l₁} Re η + i(σ⁺+σ⁻)_{l₁} Im η]
    to the exponent of the variables holding l₁ and l₂.
    """
    bath, r, dt = ctx.bath, ctx.r, ctx.dt
    if not bath.has_noise(axis, r):
        return
    coupling = bath.coupling(axis, r)
    energy = [coupling.at((l // 2) * dt) for l in range(2 * n + 2)]
    diff = _SIGMA_PLUS - _SIGMA_MINUS
    total = _SIGMA_PLUS + _SIGMA_MINUS
    exponents: dict[tuple[int, int], np.ndarray] = {}
    for l2 in range(2 * n + 2):
        q2 = _half_step_variable(axis, l2)
        for l1 in range(l2 + 1):
            q1 = _half_step_variable(axis, l1)
            distance = slice_of(axis, q2, ctx.delta_m) - slice_of(axis, q1, ctx.delta_m)
            if memory_window and distance > ctx.window:
                continue
            eta = eta_direct(bath, axis, r, n, l2, l1, dt)
            inner = diff * eta.real + 1j * total * eta.imag
            # [j₁, j₂] with j₁ on q₁ and j₂ on q₂
            term = energy[l1] * energy[l2] * np.outer(inner, diff)
            key = (q1, q2)
            exponents[key] = exponents[key] + term if key in exponents else term
    for (q1, q2), exponent in exponents.items():
        if q1 == q2:
            graph.add(np.exp(-np.diagonal(exponent)), [labels[q1]])
        else:
            graph.add(np.exp(-exponent), [labels[q1], labels[q2]])


def brute_force_rho(
    model: SystemModel,
    bath: BathModel,
    n: int,
    dt: float,
    psi: MPS | None = None,
    *,
    memory_window: bool = True,
) -> np.ndarray:
    """Dense 2^L × 2^L reduced density matrix after *n* steps.

    ``memory_window=False`` keeps every bath pair, computing η directly
    where the caches stop, instead of the K_τ truncation.
    """
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    n_sites = model.n_sites
    delta_m = bath.uniform_delta_m()
    _check_guard(n_sites, n, delta_m)
    if psi is None:
        psi = MPS.product([np.array([1.0, 0.0])] * n_sites)
    logger.debug(
        "brute force over %d path variables (L=%d, n=%d, K_tau=%d)",
        path_variable_count(n_sites, n, delta_m),
        n_sites,
        n,
        k_tau(bath.tau, dt),
    )

    graph = _FactorGraph()
    z_labels: list[list[int]] = []
    for r in range(n_sites):
        ctx = build_site_context(model, bath, dt, r)
        z = graph.new_labels(n + 2)
        z_labels.append(z)
        if delta_m == 3:
            y = graph.new_labels(2 * n + 2)
            for step in range(n + 1):
                graph.add(
                    _pair_table(lambda a, b: two_point_yz(YZDirection.YZ2, a, b)),
                    [z[step], y[2 * step]],
                )
                graph.add(
                    _pair_table(
                        lambda a, b, step=step: two_point_tfc(ctx, Axis.Y, n, step, a, b)
                    ),
                    [y[2 * step], y[2 * step + 1]],
                )
                graph.add(
                    _pair_table(lambda a, b: two_point_yz(YZDirection.YZ1, a, b)),
                    [y[2 * step + 1], z[step + 1]],
                )
            _add_bath(graph, ctx, Axis.Y, n, y, memory_window)
        else:
            for step in range(n + 1):
                graph.add(
                    _pair_table(
                        lambda a, b, step=step: two_point_tfc(ctx, Axis.Z, n, step, a, b)
                    ),
                    [z[step], z[step + 1]],
                )
        _add_bath(graph, ctx, Axis.Z, n, z, memory_window)

    for k in range(n + 2):
        graph.add(_phase_tensor(model, n, k, dt), [z[k] for z in z_labels])
    graph.add(_initial_tensor(psi), [z[0] for z in z_labels])

    out_labels = [z[n + 1] for z in z_labels]
    result = np.einsum(*graph.operands, out_labels, optimize="greedy")
    t = np.asarray(result).reshape((2, 2) * n_sites)
    t = t.transpose([2 * i for i in range(n_sites)] + [2 * i + 1 for i in range(n_sites)])
    return t.reshape(2**n_sites, 2**n_sites)
