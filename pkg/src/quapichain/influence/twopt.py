"""Two-point influence functions between base-4 path variables.

Every factor of the discretized path integral couples at most two slices
m₁ ≤ m₂ of one site: the transverse-field propagator between adjacent
slices of the same axis, the z↔y basis change inside a step, and the bath
memory kernel exp(−γ) between any two slices of the same axis within the
memory window.  :func:`two_point_total` folds them into one number per
(m₁, m₂) pair as the tensor-network nodes need it.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from quapichain.bath.eta import EtaCaches, eta_direct, eta_lookup, get_eta_caches, k_tau
from quapichain.domain.models import Axis, BathModel, SystemModel
from quapichain.domain.weights import trotter_weight_w
from quapichain.influence.base4 import LayerMap, layer_maps, spin_pair

logger = logging.getLogger(__name__)

_INV_2SQRT2 = 1.0 / (2.0 * math.sqrt(2.0))
# exponent c_ν of the off-diagonal single-branch term
_C_NU = {Axis.Y: 1, Axis.Z: 2}


class YZDirection(str, Enum):
    Z_TO_Y = "z->y"
    Y_TO_Z = "y->z"
    YZ1 = "yz1"
    YZ2 = "yz2"


# ── Per-site inputs ─────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class SiteContext:
    """Everything the influence factors of site *r* depend on."""

    r: int
    model: SystemModel
    bath: BathModel
    dt: float
    k_tau: int
    delta_m: int
    eta_y: EtaCaches | None
    eta_z: EtaCaches | None

    def caches(self, axis: Axis) -> EtaCaches | None:
        return self.eta_y if axis is Axis.Y else self.eta_z

    def layer(self, n: int | None) -> LayerMap:
        return layer_maps(n, self.delta_m == 3, self.k_tau)

    @property
    def window(self) -> int:
        """Largest slice distance m₂ − m₁ that still carries a factor."""
        return self.k_tau * self.delta_m - 1


def build_site_context(model: SystemModel, bath: BathModel, dt: float, r: int) -> SiteContext:
    """Collect site *r*'s inputs, building (or reusing) its η caches."""
    delta_m = bath.uniform_delta_m()
    caches = {
        axis: get_eta_caches(bath, axis, r, dt) if bath.has_noise(axis, r) else None
        for axis in Axis
    }
    return SiteContext(
        r=r,
        model=model,
        bath=bath,
        dt=dt,
        k_tau=k_tau(bath.tau, dt),
        delta_m=delta_m,
        eta_y=caches[Axis.Y],
        eta_z=caches[Axis.Z],
    )


# ── Basis changes ───────────────────────────────────────────────────
def z_to_y(sigma_y: int, sigma_z: int) -> complex:
    """Overlap between σ_y and σ_z eigenstates entering a y slice."""
    return (1 - 1j * sigma_y + sigma_z + 1j * sigma_y * sigma_z) * _INV_2SQRT2


def y_to_z(sigma_z: int, sigma_y: int) -> complex:
    return z_to_y(sigma_y, sigma_z).conjugate()


def yz1(y_plus: int, y_minus: int, z_plus: int, z_minus: int) -> complex:
    """Closing basis change of a step: last y slice into the next z slice."""
    return y_to_z(z_plus, y_plus) * z_to_y(y_minus, z_minus)


def yz2(y_plus: int, y_minus: int, z_plus: int, z_minus: int) -> complex:
    """Opening basis change of a step: z slice into the first y slice."""
    return z_to_y(y_plus, z_plus) * y_to_z(z_minus, y_minus)


def two_point_yz(direction: YZDirection, a: int, b: int) -> complex:
    """Basis-change factor.

    For ``Z_TO_Y`` the arguments are spins ``(σ_y, σ_z)``, for ``Y_TO_Z``
    ``(σ_z, σ_y)``.  For ``YZ1``/``YZ2`` they are base-4 variables at
    (m₁, m₂): y then z for ``YZ1``, z then y for ``YZ2``.
    """
    if direction is YZDirection.Z_TO_Y:
        return z_to_y(a, b)
    if direction is YZDirection.Y_TO_Z:
        return y_to_z(a, b)
    if direction is YZDirection.YZ1:
        return yz1(*spin_pair(a), *spin_pair(b))
    return yz2(*spin_pair(b), *spin_pair(a))


# ── Transverse field ────────────────────────────────────────────────
def single_branch(alpha: int, a: int, b: int, theta: float, axis: Axis) -> complex:
    """Matrix element of exp(∓iθσ_x/2) in the σ_ν basis for one branch."""
    c = _C_NU[axis]
    diag = 0.25 * (a + b) ** 2 * math.cos(theta / 2.0)
    off = (1j ** (1 + c)) * alpha * (0.5 * (a - b)) ** c * math.sin(theta / 2.0)
    return diag + off


def tfc_angle(ctx: SiteContext, n: int | None, k: int) -> float:
    w = trotter_weight_w(n, k)
    if w == 0.0:
        return 0.0
    return 2.0 * ctx.dt * w * ctx.model.hx[ctx.r].at(k * ctx.dt)


def two_point_tfc(ctx: SiteContext, nu: Axis, n: int | None, k: int, j1: int, j2: int) -> complex:
    """Transverse-field propagator between consecutive slices of axis *nu*."""
    theta = tfc_angle(ctx, n, k)
    p1, m1 = spin_pair(j1)
    p2, m2 = spin_pair(j2)
    return single_branch(1, p2, p1, theta, nu) * single_branch(-1, m1, m2, theta, nu)


# ── Bath ────────────────────────────────────────────────────────────
def upsilon(nu: Axis, n: int | None, q1: int, q2: int) -> list[tuple[int, int]]:
    """Half-step index pairs (l₁ ≤ l₂) through which variables q₁ ≤ q₂ interact."""
    if not 0 <= q1 <= q2:
        raise ValueError(f"need 0 <= q1 <= q2, got ({q1}, {q2})")
    if nu is Axis.Y:
        if n is not None and q2 > 2 * n + 1:
            raise ValueError(f"y index {q2} exceeds 2n+1 for n={n}")
        return [(q1, q2)]
    if n is not None and q2 > n + 1:
        raise ValueError(f"z index {q2} exceeds n+1 for n={n}")
    last = None if n is None else n + 1
    if q1 == q2 == 0:
        return [(0, 0)]
    if q2 == last:
        end = 2 * q2 - 1
        if q1 == last:
            return [(end, end)]
        if q1 == 0:
            return [(0, end)]
        return [(2 * q1 - 1, end), (2 * q1, end)]
    if q1 == 0:
        return [(0, 2 * q2 - 1), (0, 2 * q2)]
    if q1 == q2:
        return [(2 * q1 - 1, 2 * q1 - 1), (2 * q1 - 1, 2 * q1), (2 * q1, 2 * q1)]
    return [
        (2 * q1 - 1, 2 * q2 - 1),
        (2 * q1, 2 * q2 - 1),
        (2 * q1 - 1, 2 * q2),
        (2 * q1, 2 * q2),
    ]


def coupling_energy(ctx: SiteContext, nu: Axis, l: int) -> float:  # noqa: E741
    return ctx.bath.coupling(nu, ctx.r).at((l // 2) * ctx.dt)


def bath_factor_q(
    ctx: SiteContext,
    nu: Axis,
    n: int | None,
    q1: int,
    q2: int,
    j1: int,
    j2: int,
    *,
    eta_fallback: bool = False,
) -> complex:
    """Bath factor between variables q₁ ≤ q₂ of axis *nu*.

    Pairs outside the cached memory window contribute 1, unless
    *eta_fallback* asks for their η to be computed directly.
    """
    caches = ctx.caches(nu)
    if caches is None:
        return 1.0 + 0j
    p1, m1 = spin_pair(j1)
    p2, m2 = spin_pair(j2)
    if p2 == m2:
        return 1.0 + 0j
    gamma = 0j
    for l1, l2 in upsilon(nu, n, q1, q2):
        eta = eta_lookup(caches, n, l2, l1)
        if eta is None:
            if not eta_fallback or n is None:
                continue
            eta = eta_direct(ctx.bath, nu, ctx.r, n, l2, l1, ctx.dt)
        scale = coupling_energy(ctx, nu, l1) * coupling_energy(ctx, nu, l2)
        gamma += scale * (p2 - m2) * ((p1 - m1) * eta.real + 1j * (p1 + m1) * eta.imag)
    return cmath.exp(-gamma)


def two_point_bath(
    ctx: SiteContext, nu: Axis, n: int | None, m1: int, m2: int, j1: int, j2: int
) -> complex:
    """Bath factor between slices m₁ ≤ m₂, both on axis *nu*."""
    layer = ctx.layer(n)
    if m1 > m2 or layer.nu_tilde(m1) is not nu or layer.nu_tilde(m2) is not nu:
        raise ValueError(f"slices ({m1}, {m2}) are not an ordered {nu.value} pair")
    return bath_factor_q(ctx, nu, n, layer.q_tilde(m1), layer.q_tilde(m2), j1, j2)


# ── Combined factor ─────────────────────────────────────────────────
def two_point_total(
    ctx: SiteContext, n: int | None, m1: int, m2: int, j1: int, j2: int
) -> complex:
    """All influence acting between slices m₁ and m₂ of one site."""
    if not 0 <= m1 <= m2 or m2 - m1 > ctx.window:
        raise ValueError(f"slice pair ({m1}, {m2}) outside the memory window")
    adjacent = m1 == m2 - 1
    if ctx.delta_m == 1:
        value = two_point_bath(ctx, Axis.Z, n, m1, m2, j1, j2)
        if adjacent:
            value *= two_point_tfc(ctx, Axis.Z, n, m1, j1, j2)
        return value

    r1, r2 = m1 % 3, m2 % 3
    if r2 == 0:
        if r1 == 0:
            return two_point_bath(ctx, Axis.Z, n, m1, m2, j1, j2)
        return two_point_yz(YZDirection.YZ1, j1, j2) if adjacent else 1.0 + 0j
    if r2 == 1:
        if adjacent:
            return two_point_yz(YZDirection.YZ2, j1, j2)
        if r1 == 0:
            return 1.0 + 0j
        return two_point_bath(ctx, Axis.Y, n, m1, m2, j1, j2)
    if r1 == 0:
        return 1.0 + 0j
    value = two_point_bath(ctx, Axis.Y, n, m1, m2, j1, j2)
    if adjacent:
        k = ctx.layer(n).q_tilde(m1) // 2
        value *= two_point_tfc(ctx, Axis.Y, n, k, j1, j2)
    return value


def two_point_matrix(ctx: SiteContext, n: int | None, m1: int, m2: int) -> np.ndarray:
    """4×4 table of :func:`two_point_total` over (j₁, j₂)."""
    out = np.empty((4, 4), dtype=np.complex128)
    for j1 in range(4):
        for j2 in range(4):
            out[j1, j2] = two_point_total(ctx, n, m1, m2, j1, j2)
    return out
