"""Memory-truncated bath influence coefficients η.

η_{n;l₁,l₂} = ∫ dω/2π · A_T(ω) · f(ω)/ω²  with
f = e^{−iW₀ω} + e^{−iW₁ω} − e^{−iW₂ω} − e^{−iW₃ω},
where the W's are partial sums of the half-step weights between l₂ and l₁.

Only a handful of distinct values occur once the step count exceeds the
memory window, so they are computed once into six cache arrays per
(axis, site) and every later request is answered by :func:`eta_lookup`.
"""

from __future__ import annotations

import logging
import math
import threading
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from quapichain.bath.spectral import eval_component_at_T
from quapichain.domain.models import Axis, BathModel, SpectralComponent
from quapichain.domain.weights import trotter_weight_wtilde
from quapichain.numerics.quadrature import integrate_adaptive, integrate_weighted_osc

logger = logging.getLogger(__name__)

# Taylor branch below this multiple of 1/W_max.
SMALL_OMEGA = 1e-3
# Above |βω| = 25 the Bose factor is flat to double precision.
BOSE_EDGE = 25.0

_SMOOTH_PARTITIONS = frozenset({2, 3, 5, 6})
_SIGNS = (1.0, 1.0, -1.0, -1.0)

_cache_store: dict[tuple[str, Axis, int, float], EtaCaches] = {}
_cache_lock = threading.Lock()


def clear_eta_caches() -> None:
    """Drop every memoised cache set."""
    with _cache_lock:
        _cache_store.clear()


# ── Index helpers ───────────────────────────────────────────────────
def k_tau(tau: float, dt: float) -> int:
    """Number of steps covered by the memory window (always ≥ 3)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    # round off representation noise so τ = 7Δt/4 lands on zero
    x = round((tau - 1.75 * dt) / dt, 12)
    return max(0, math.ceil(x)) + 3


def w_coeffs(n: int, l1: int, l2: int, dt: float) -> tuple[float, float, float, float]:
    """(W₀, W₁, W₂, W₃) = Δt·Σ w̃ over [l₂, l₁−1], [l₂+1, l₁], [l₂+1, l₁−1], [l₂, l₁].

    Empty sums vanish, so l₁ = l₂ gives (0, 0, 0, Δt·w̃_{l₁}).
    """
    if not 0 <= l2 <= l1 <= 2 * n + 1:
        raise ValueError(f"need 0 <= l2 <= l1 <= 2n+1, got n={n}, l1={l1}, l2={l2}")

    def span(lo: int, hi: int) -> float:
        return dt * sum(trotter_weight_wtilde(n, l) for l in range(lo, hi + 1))

    return span(l2, l1 - 1), span(l2 + 1, l1), span(l2 + 1, l1 - 1), span(l2, l1)


def eta_integrand_parts(
    omega: float,
    coeffs: tuple[float, float, float, float],
    same_index: bool,
    w_max: float,
) -> tuple[float, float]:
    """Re f/ω² and Im f/ω² with a Taylor branch around the removable singularity."""
    if w_max == 0.0:
        return 0.0, 0.0
    if abs(omega) < SMALL_OMEGA / w_max:
        f1 = 0.0
        f2 = 0.0
        for m in range(1, 4):
            even = sum(s * w ** (2 * m) for s, w in zip(_SIGNS, coeffs))
            f1 += (-1) ** m * omega ** (2 * m - 2) / math.factorial(2 * m) * even
            if not same_index:
                odd = sum(s * w ** (2 * m + 1) for s, w in zip(_SIGNS, coeffs))
                f2 -= (-1) ** m * omega ** (2 * m - 1) / math.factorial(2 * m + 1) * odd
        return f1, f2
    w2 = omega * omega
    f1 = sum(s * math.cos(w * omega) for s, w in zip(_SIGNS, coeffs)) / w2
    if same_index:
        return f1, 0.0
    f2 = -sum(s * math.sin(w * omega) for s, w in zip(_SIGNS, coeffs)) / w2
    return f1, f2


# ── Direct evaluation ───────────────────────────────────────────────
def _partition_points(c: SpectralComponent, beta: float, w_max: float) -> list[float]:
    uv, ir = c.w_uv, c.w_ir
    w_a = -math.pi / w_max if w_max > 0 else -math.inf
    w_b = -BOSE_EDGE / beta
    p0 = -uv
    p2 = min(max(-uv, w_a), -ir)
    p4 = -ir
    p1 = w_b if p0 < w_b < p2 else p0
    p3 = w_b if p2 < w_b < p4 else p4
    left = [p0, p1, p2, p3, p4]
    return left + [-p for p in reversed(left)]


def _eta_component(
    c: SpectralComponent,
    beta: float,
    coeffs: tuple[float, float, float, float],
    same_index: bool,
) -> complex:
    w_max = max(coeffs)
    points = _partition_points(c, beta, w_max)

    def a_t(w: float) -> float:
        return eval_component_at_T(c, beta, w)

    def a_over_w2(w: float) -> float:
        a = a_t(w)
        return a / (w * w) if a != 0.0 else 0.0

    re = 0.0
    im = 0.0
    for a in range(9):
        lo, hi = points[a], points[a + 1]
        if hi <= lo:
            continue
        if a in _SMOOTH_PARTITIONS:
            re += integrate_adaptive(
                lambda w: a_t(w) * eta_integrand_parts(w, coeffs, same_index, w_max)[0], lo, hi
            ).value
            if not same_index:
                im += integrate_adaptive(
                    lambda w: a_t(w) * eta_integrand_parts(w, coeffs, same_index, w_max)[1],
                    lo,
                    hi,
                ).value
            continue
        for sign, w_j in zip(_SIGNS, coeffs):
            re += sign * integrate_weighted_osc(a_over_w2, lo, hi, w_j, "cos").value
            if not same_index:
                im -= sign * integrate_weighted_osc(a_over_w2, lo, hi, w_j, "sin").value
    return complex(re, im) / (2.0 * math.pi)


def eta_direct(b: BathModel, nu: Axis, r: int, n: int, l1: int, l2: int, dt: float) -> complex:
    """η_{ν;r;n;l₁,l₂} by partitioned quadrature (no caching)."""
    coeffs = w_coeffs(n, l1, l2, dt)
    return sum(
        (_eta_component(c, b.beta, coeffs, l1 == l2) for c in b.components(nu, r)),
        start=0j,
    )


# ── Caches ──────────────────────────────────────────────────────────
@dataclass(frozen=True)
class EtaCaches:
    """The six η arrays for one (axis, site), all for the same K_τ.

    cache1[a] = η_{a+1; 2a+2, 0}        a < K−1
    cache2[a] = η_{a+1; 2a+3, 0}        a < K−1
    cache3[a] = η_{a+1; 2a+2, 1}        a < K
    cache4[a] = η_{K+2; 2K+3, a+4}      a < 2K
    cache5[a] = η_{K+1; 2K+2, a+3}      a < 2K
    cache6[a] = η_{K; 2K+1, a+2}        a < 2K
    """

    k_tau: int
    cache1: np.ndarray
    cache2: np.ndarray
    cache3: np.ndarray
    cache4: np.ndarray
    cache5: np.ndarray
    cache6: np.ndarray

    def arrays(self) -> dict[str, np.ndarray]:
        return {f"cache{i}": getattr(self, f"cache{i}") for i in range(1, 7)}

    def rows(self) -> Iterator[tuple[str, int, complex]]:
        for name, arr in self.arrays().items():
            for a, value in enumerate(arr):
                yield name, a, complex(value)


def cache_index_map(k: int) -> dict[str, list[tuple[int, int, int]]]:
    """Defining (n, l₁, l₂) for every slot of every cache array."""
    return {
        "cache1": [(a + 1, 2 * a + 2, 0) for a in range(k - 1)],
        "cache2": [(a + 1, 2 * a + 3, 0) for a in range(k - 1)],
        "cache3": [(a + 1, 2 * a + 2, 1) for a in range(k)],
        "cache4": [(k + 2, 2 * k + 3, a + 4) for a in range(2 * k)],
        "cache5": [(k + 1, 2 * k + 2, a + 3) for a in range(2 * k)],
        "cache6": [(k, 2 * k + 1, a + 2) for a in range(2 * k)],
    }


def build_eta_caches(b: BathModel, nu: Axis, r: int, dt: float) -> EtaCaches:
    """Evaluate every cache slot with :func:`eta_direct`."""
    k = k_tau(b.tau, dt)
    arrays: dict[str, np.ndarray] = {}
    for name, slots in cache_index_map(k).items():
        if b.has_noise(nu, r):
            values = [eta_direct(b, nu, r, n, l1, l2, dt) for n, l1, l2 in slots]
        else:
            values = [0j] * len(slots)
        arrays[name] = np.array(values, dtype=np.complex128)
    logger.debug("Built eta caches for axis=%s site=%d (K_tau=%d)", nu.value, r, k)
    return EtaCaches(k_tau=k, **arrays)


def get_eta_caches(b: BathModel, nu: Axis, r: int, dt: float) -> EtaCaches:
    """Memoised :func:`build_eta_caches`."""
    key = (b.fingerprint(), nu, r, dt)
    with _cache_lock:
        hit = _cache_store.get(key)
    if hit is not None:
        return hit
    built = build_eta_caches(b, nu, r, dt)
    with _cache_lock:
        return _cache_store.setdefault(key, built)


def warm_eta_caches(b: BathModel, dt: float, threads: int = 1) -> None:
    """Build the caches for every noisy (axis, site) up front, in parallel."""
    jobs = [(nu, r) for nu in Axis for r in range(b.n_sites) if b.has_noise(nu, r)]
    if threads <= 1 or len(jobs) <= 1:
        for nu, r in jobs:
            get_eta_caches(b, nu, r, dt)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda job: get_eta_caches(b, job[0], job[1], dt), jobs))


# ── Lookup ──────────────────────────────────────────────────────────
def eta_lookup(c: EtaCaches, n: int | None, l1: int, l2: int) -> complex | None:
    """Cached η_{n;l₁,l₂}, or ``None`` outside the memory window.

    ``n=None`` asks for the bulk value, which only depends on l₁ − l₂ and
    on whether l₂ touches the left boundary.
    """
    if not 0 <= l2 <= l1:
        raise ValueError(f"need 0 <= l2 <= l1, got l1={l1}, l2={l2}")
    if n is not None and l1 > 2 * n + 1:
        raise ValueError(f"l1={l1} exceeds 2n+1 for n={n}")
    k = c.k_tau
    top = 2 * n - 1 if n is not None else math.inf
    hits: list[complex] = []

    if l2 == 0 and l1 <= min(2 * k - 1, top):
        hits.append(c.cache6[2 * k - 1 - l1])
    if l2 == 1 and 1 <= l1 <= min(2 * k, top):
        hits.append(c.cache5[2 * k - l1])
    if l2 >= 2 and l1 <= top and l1 - l2 <= 2 * k - 1:
        hits.append(c.cache4[2 * k - 1 - l1 + l2])
    if n is not None:
        if l1 == 2 * n and l2 == 0 and n <= k - 1:
            hits.append(c.cache1[n - 1])
        if l1 == 2 * n + 1 and l2 == 0 and n <= k - 1:
            hits.append(c.cache2[n - 1])
        if l1 == 2 * n and l2 == 1 and n <= k:
            hits.append(c.cache3[n - 1])
        if l1 == 2 * n + 1 and l2 == 1 and n <= k - 1:
            # mirror image of (2n, 0)
            hits.append(c.cache1[n - 1])
        if l1 == 2 * n and max(2, 2 * n + 1 - 2 * k) <= l2:
            hits.append(c.cache5[2 * k - 2 * n - 1 + l2])
        if l1 == 2 * n + 1 and max(2, 2 * n + 2 - 2 * k) <= l2:
            hits.append(c.cache6[2 * k - 2 * n - 2 + l2])

    if len(hits) > 1:
        raise RuntimeError(f"eta lookup matched {len(hits)} cases for n={n}, l1={l1}, l2={l2}")
    return complex(hits[0]) if hits else None
