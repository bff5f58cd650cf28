"""Longitudinal field and coupler phases e^{iφ} of one time slice.

The phase at z slice k collects the h_z and J_zz terms of both branches,
weighted by the trapezoid weights of the neighbouring integer times.  As an
MPS it is diagonal on each site; the nearest-neighbour coupler matrix is
split by a rank-revealing SVD, so bonds never exceed 4.
"""

from __future__ import annotations

import cmath
from collections.abc import Sequence

import numpy as np

from quapichain.domain.models import SystemModel
from quapichain.domain.weights import trotter_weight_w
from quapichain.influence.base4 import g_alpha
from quapichain.tn.core import MPS, truncated_factorization

_G_PLUS = np.array([g_alpha(1, j) for j in range(4)], dtype=float)
_G_MINUS = np.array([g_alpha(-1, j) for j in range(4)], dtype=float)


def _weighted_fields(
    model: SystemModel, n: int | None, k: int, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Σ_{k'=k−1}^{k} w_{n;k'}·h_z(t_{k'}) and the same for J_zz."""
    hz = np.zeros(model.n_sites)
    jzz = np.zeros(model.n_sites)
    for kk in (k - 1, k):
        w = trotter_weight_w(n, kk)
        if w == 0.0:
            continue
        _, hz_t, j_t = model.fields_at(kk * dt)
        hz += w * hz_t
        jzz += w * j_t
    return hz, jzz


def phase_scalar(
    model: SystemModel, n: int | None, k: int, jconfig: Sequence[int], dt: float
) -> complex:
    """exp(i Σ_α φ_α) for one base-4 configuration of the chain at slice k."""
    if len(jconfig) != model.n_sites:
        raise ValueError(f"config has {len(jconfig)} entries for {model.n_sites} sites")
    hz, jzz = _weighted_fields(model, n, k, dt)
    phi = 0.0
    for alpha in (1, -1):
        g = [g_alpha(alpha, j) for j in jconfig]
        energy = sum(hz[r] * g[r] for r in range(model.n_sites))
        energy += sum(jzz[r] * g[r] * g[r + 1] for r in range(model.n_sites - 1))
        phi += -alpha * dt / 2.0 * energy
    return cmath.exp(1j * phi)


def build_phase_mps(model: SystemModel, n: int | None, k: int, dt: float) -> MPS:
    """The phase of slice k as an MPS with physical dimension 4."""
    hz, jzz = _weighted_fields(model, n, k, dt)
    n_sites = model.n_sites
    onsite = [np.exp(-0.5j * dt * hz[r] * (_G_PLUS - _G_MINUS)) for r in range(n_sites)]

    right_factors: list[np.ndarray] = []
    left_factors: list[np.ndarray] = []
    for r in range(n_sites - 1):
        coupler = np.exp(
            -0.5j * dt * jzz[r] * (np.outer(_G_PLUS, _G_PLUS) - np.outer(_G_MINUS, _G_MINUS))
        )
        f = truncated_factorization(coupler)
        right_factors.append(f.left * f.singular_values)  # [j_r, c]
        left_factors.append(f.right)  # [c, j_{r+1}]

    cores = []
    for r in range(n_sites):
        into = left_factors[r - 1] if r > 0 else np.ones((1, 4))
        out = right_factors[r] if r < n_sites - 1 else np.ones((4, 1))
        cores.append(np.einsum("cj,j,jd->cjd", into, onsite[r], out))
    return MPS(tuple(cores))
