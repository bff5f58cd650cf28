"""Finite-temperature spectral densities and bath correlation functions.

A zero-temperature component A₀(ω) is dressed with the Bose factor,

    A_T(ω) = A₀(|ω|) · sign(ω) / (1 − e^{−βω}),

evaluated in four branches so neither e^{βω} nor 1/(βω) overflows.  Near
ω = 0 the factor is replaced by its Taylor expansion and ω = 0 itself by
the limiting value slope0/β.
"""

from __future__ import annotations

import math

import numpy as np

from quapichain.domain.models import Axis, BathModel, SpectralComponent
from quapichain.numerics.quadrature import integrate_weighted_osc

# Branch threshold in units of 1/β.
SMALL_BETA_OMEGA = 1e-3


def _in_band(c: SpectralComponent, w: float) -> bool:
    aw = abs(w)
    if aw == 0.0:
        return c.w_ir == 0.0
    return c.w_ir < aw <= c.w_uv


def eval_component_at_T(c: SpectralComponent, beta: float, omega: float) -> float:
    """A_T(ω) for one component at inverse temperature *beta*."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not _in_band(c, omega):
        return 0.0
    if omega == 0.0:
        return c.slope_at_zero / beta
    x = beta * omega
    a0 = c.zero_temperature(abs(omega))
    if abs(x) < SMALL_BETA_OMEGA:
        series = 1.0 + x / 2.0 + x * x / 12.0 - x**4 / 720.0
        return math.copysign(1.0, omega) * a0 / x * series
    if omega < 0:
        # e^{βω}/(1 − e^{βω}) stays bounded for large negative βω
        return -a0 * math.exp(x) / math.expm1(x)
    return -a0 / math.expm1(-x)


def eval_spectral_density(b: BathModel, nu: Axis, r: int, omega: float) -> float:
    """Sum of the component densities on axis *nu* at site *r*."""
    return sum(eval_component_at_T(c, b.beta, omega) for c in b.components(nu, r))


def component_breakpoints(c: SpectralComponent, beta: float) -> list[float]:
    """Sorted support points of a component: band edges, 0 and the branch switches."""
    edge = SMALL_BETA_OMEGA / beta
    points = {-c.w_uv, -c.w_ir, c.w_ir, c.w_uv}
    if c.w_ir == 0.0:
        points.add(0.0)
    for p in (-edge, edge):
        if c.w_ir < abs(p) < c.w_uv:
            points.add(p)
    return sorted(points)


def _support_intervals(c: SpectralComponent, beta: float) -> list[tuple[float, float]]:
    pts = component_breakpoints(c, beta)
    gap = (-c.w_ir, c.w_ir)
    return [(a, z) for a, z in zip(pts, pts[1:]) if z > a and not (a >= gap[0] and z <= gap[1])]


def bath_correlation(b: BathModel, nu: Axis, r: int, t: float) -> complex:
    """C(t) = (1/2π) ∫ dω A_T(ω) e^{−iωt}.

    Uses C(−t) = C(t)* so the kernel rate is always |t|.
    """
    if t < 0:
        return bath_correlation(b, nu, r, -t).conjugate()
    re = 0.0
    im = 0.0
    for c in b.components(nu, r):

        def a_t(w: float, comp: SpectralComponent = c) -> float:
            return eval_component_at_T(comp, b.beta, w)

        for lo, hi in _support_intervals(c, b.beta):
            re += integrate_weighted_osc(a_t, lo, hi, t, "cos").value
            im -= integrate_weighted_osc(a_t, lo, hi, t, "sin").value
    return complex(re, im) / (2.0 * math.pi)


def noise_strength(b: BathModel, nu: Axis, r: int) -> float:
    """(1/2π) ∫ dω A_T(ω), i.e. C(0)."""
    return bath_correlation(b, nu, r, 0.0).real


def sample_spectral_density(b: BathModel, nu: Axis, r: int, omegas: np.ndarray) -> np.ndarray:
    """Vector of A_T samples (for ``bath-info`` and tests)."""
    return np.array([eval_spectral_density(b, nu, r, float(w)) for w in omegas])
