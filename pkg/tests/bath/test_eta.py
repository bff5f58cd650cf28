"""Tests for the η memory kernels (``quapichain.bath.eta``)."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from quapichain.bath import eta as eta_module
from quapichain.bath.eta import (
    build_eta_caches,
    cache_index_map,
    eta_direct,
    eta_integrand_parts,
    eta_lookup,
    get_eta_caches,
    k_tau,
    w_coeffs,
)
from quapichain.bath.spectral import eval_spectral_density
from quapichain.domain.models import Axis, BathModel, SpectralComponent
from quapichain.influence.twopt import upsilon

DT = 0.2
# τ = 2.5Δt gives a four-step memory window
TAU = 0.5


@pytest.fixture
def memory_bath(ohmic_component: SpectralComponent) -> BathModel:
    return BathModel(n_sites=1, beta=1.0, tau=TAU, z_components=[[ohmic_component]])


class TestIndexHelpers:
    def test_k_tau_floor_is_three(self) -> None:
        assert k_tau(0.0, 0.1) == 3
        assert k_tau(0.175, 0.1) == 3

    def test_k_tau_grows_with_memory(self) -> None:
        assert k_tau(TAU, DT) == 4
        assert k_tau(1.0, 0.1) == 12

    def test_w_coeffs_same_index(self) -> None:
        assert w_coeffs(2, 3, 3, DT) == (0.0, 0.0, 0.0, pytest.approx(0.5 * DT))

    def test_w_coeffs_ordering(self) -> None:
        w0, w1, w2, w3 = w_coeffs(3, 5, 2, DT)
        assert w3 >= max(w0, w1) >= min(w0, w1) >= w2

    def test_taylor_branch_matches_direct(self) -> None:
        coeffs = w_coeffs(3, 5, 2, DT)
        w_max = max(coeffs)
        edge = eta_module.SMALL_OMEGA / w_max
        taylor = eta_integrand_parts(0.999 * edge, coeffs, False, w_max)
        direct = eta_integrand_parts(1.001 * edge, coeffs, False, w_max)
        np.testing.assert_allclose(taylor, direct, rtol=1e-5)


class TestEtaDirect:
    def test_matches_plain_quadrature(self, memory_bath: BathModel) -> None:
        n, l1, l2 = 2, 4, 1
        coeffs = w_coeffs(n, l1, l2, DT)
        signs = (1.0, 1.0, -1.0, -1.0)
        even2 = sum(s * c**2 for s, c in zip(signs, coeffs))
        even4 = sum(s * c**4 for s, c in zip(signs, coeffs))
        odd3 = sum(s * c**3 for s, c in zip(signs, coeffs))

        def density(w: float) -> float:
            return eval_spectral_density(memory_bath, Axis.Z, 0, w)

        def re_part(w: float) -> float:
            if abs(w) < 1e-3:
                return density(w) * (-0.5 * even2 + w * w * even4 / 24)
            return density(w) * sum(s * math.cos(c * w) for s, c in zip(signs, coeffs)) / (w * w)

        def im_part(w: float) -> float:
            if abs(w) < 1e-3:
                return density(w) * w * odd3 / 6
            return -density(w) * sum(s * math.sin(c * w) for s, c in zip(signs, coeffs)) / (w * w)

        opts = {"points": [0.0], "limit": 400, "epsabs": 1e-13}
        re = integrate.quad(re_part, -8.0, 8.0, **opts)[0]
        im = integrate.quad(im_part, -8.0, 8.0, **opts)[0]
        expected = complex(re, im) / (2 * math.pi)
        got = eta_direct(memory_bath, Axis.Z, 0, n, l1, l2, DT)
        assert got == pytest.approx(expected, rel=1e-7, abs=1e-11)

    def test_quiet_axis_is_zero(self, memory_bath: BathModel) -> None:
        assert eta_direct(memory_bath, Axis.Y, 0, 2, 3, 1, DT) == 0j


class TestCaches:
    def test_slots_match_direct(self, memory_bath: BathModel) -> None:
        caches = build_eta_caches(memory_bath, Axis.Z, 0, DT)
        for name, slots in cache_index_map(caches.k_tau).items():
            values = getattr(caches, name)
            assert len(values) == len(slots)
            for a, (n, l1, l2) in enumerate(slots):
                assert values[a] == pytest.approx(
                    eta_direct(memory_bath, Axis.Z, 0, n, l1, l2, DT), abs=1e-14
                )

    def test_memoised(self, memory_bath: BathModel) -> None:
        first = get_eta_caches(memory_bath, Axis.Z, 0, DT)
        assert get_eta_caches(memory_bath, Axis.Z, 0, DT) is first

    def test_lookup_agrees_with_direct_everywhere(self, memory_bath: BathModel) -> None:
        caches = get_eta_caches(memory_bath, Axis.Z, 0, DT)
        assert caches.k_tau + 1 < 6
        checked: set[int] = set()
        for n in range(1, 7):
            for l1 in range(2 * n + 2):
                for l2 in range(l1 + 1):
                    hit = eta_lookup(caches, n, l1, l2)
                    if hit is None:
                        continue
                    direct = eta_direct(memory_bath, Axis.Z, 0, n, l1, l2, DT)
                    assert hit == pytest.approx(direct, rel=1e-12, abs=1e-15), (n, l1, l2)
                    checked.add(n)
        assert checked == set(range(1, 7))

    def test_window_pairs_are_cached(self, memory_bath: BathModel) -> None:
        caches = get_eta_caches(memory_bath, Axis.Z, 0, DT)
        k = caches.k_tau
        for n in range(1, k + 3):
            for q2 in range(n + 2):
                for q1 in range(max(0, q2 - k + 1), q2 + 1):
                    for lo, hi in upsilon(Axis.Z, n, q1, q2):
                        assert eta_lookup(caches, n, hi, lo) is not None, (n, q1, q2)

    def test_bulk_matches_late_finite_values(self, memory_bath: BathModel) -> None:
        caches = get_eta_caches(memory_bath, Axis.Z, 0, DT)
        n = 6
        for l1, l2 in [(3, 0), (4, 1), (7, 5), (9, 4)]:
            bulk = eta_lookup(caches, None, l1, l2)
            assert bulk is not None
            assert bulk == pytest.approx(eta_lookup(caches, n, l1, l2), abs=1e-14)

    def test_out_of_range_lookup(self, memory_bath: BathModel) -> None:
        caches = get_eta_caches(memory_bath, Axis.Z, 0, DT)
        with pytest.raises(ValueError, match="l2 <= l1"):
            eta_lookup(caches, 2, 1, 3)
