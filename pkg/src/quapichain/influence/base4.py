"""Base-4 path variables and the slice layout of one time step.

A forward/backward Ising pair (σ⁺, σ⁻) is packed into j ∈ {0, 1, 2, 3}:
j = 0 ↔ (1, 1), 1 ↔ (1, −1), 2 ↔ (−1, 1), 3 ↔ (−1, −1).

Sites without y-noise use one slice per step (Δm = 1, all slices are z).
With y-noise every step has three slices, z then two y slices:
m = 3k → z_k, m = 3k+1 → y_{2k}, m = 3k+2 → y_{2k+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

from quapichain.domain.models import Axis


def g_alpha(alpha: int, j: int) -> int:
    """Branch spin of base-4 variable *j*: α = +1 forward, α = −1 backward."""
    if not 0 <= j <= 3:
        raise ValueError(f"base-4 index must be in 0..3, got {j}")
    if alpha == 1:
        return 1 - 2 * (j // 2)
    if alpha == -1:
        return 1 - 2 * (j % 2)
    raise ValueError(f"alpha must be +1 or -1, got {alpha}")


def spin_pair(j: int) -> tuple[int, int]:
    """``(σ⁺, σ⁻)`` for *j*."""
    return g_alpha(1, j), g_alpha(-1, j)


def base4_index(sigma_plus: int, sigma_minus: int) -> int:
    return 2 * ((1 - sigma_plus) // 2) + (1 - sigma_minus) // 2


def bar(j: int) -> int:
    """Swap the branches: 1 ↔ 2."""
    return {0: 0, 1: 2, 2: 1, 3: 3}[j]


@dataclass(frozen=True)
class LayerMap:
    """Slice layout for one site at step count *n* (``None`` for the bulk)."""

    delta_m: int
    n: int | None
    k_tau: int

    @property
    def q_y(self) -> int | None:
        if self.delta_m == 1:
            return -1
        return None if self.n is None else 2 * self.n + 1

    @property
    def q_z(self) -> int | None:
        return None if self.n is None else self.n + 1

    def nu_tilde(self, m: int) -> Axis:
        if m < 0:
            raise ValueError(f"slice index must be >= 0, got {m}")
        if self.delta_m == 1 or m % 3 == 0:
            return Axis.Z
        return Axis.Y

    def q_tilde(self, m: int) -> int:
        if m < 0:
            raise ValueError(f"slice index must be >= 0, got {m}")
        if self.delta_m == 1:
            return m
        k, rem = divmod(m, 3)
        return k if rem == 0 else 2 * k + rem - 1

    def mu_tau(self, m: int) -> int:
        """First slice inside the memory window that ends at slice *m*."""
        return max(0, m - self.k_tau * self.delta_m + 1)

    @property
    def last_slice(self) -> int | None:
        """(n+1)Δm, the slice carrying the output index."""
        return None if self.n is None else (self.n + 1) * self.delta_m


def layer_maps(n: int | None, has_y_noise: bool, k_tau: int) -> LayerMap:
    if n is not None and n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    return LayerMap(delta_m=3 if has_y_noise else 1, n=n, k_tau=k_tau)


def slice_of(axis: Axis, q: int, delta_m: int) -> int:
    """Inverse of (ν̃, q̃): the slice holding variable q on *axis*."""
    if axis is Axis.Z:
        return q * delta_m
    if delta_m != 3:
        raise ValueError("y variables only exist when a step has three slices")
    return 3 * (q // 2) + 1 + q % 2
