"""Tests for the brute-force path sum (``quapichain.observables.oracle``)."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm

from quapichain.bath.spectral import eval_spectral_density
from quapichain.config import get_settings
from quapichain.domain.models import Axis, BathModel, SpectralComponent, SystemModel
from quapichain.observables.oracle import (
    MAX_EINSUM_LABELS,
    brute_force_rho,
    path_variable_count,
)
from quapichain.tn.core import MPS

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestBruteForce:
    def test_free_spin(self, free_spin_model: SystemModel, quiet_bath: BathModel) -> None:
        rho = brute_force_rho(free_spin_model, quiet_bath, 1, 0.2)
        u = expm(-0.2j * SIGMA_X)
        np.testing.assert_allclose(rho, u @ np.diag([1, 0]) @ u.conj().T, atol=1e-14)

    def test_custom_initial_state(self, quiet_bath: BathModel) -> None:
        s = 1 / math.sqrt(2)
        psi = MPS.product([np.array([s, -s])])
        rho = brute_force_rho(SystemModel(n_sites=1), quiet_bath, 2, 0.1, psi)
        np.testing.assert_allclose(rho, 0.5 * np.array([[1, -1], [-1, 1]]), atol=1e-14)

    @pytest.mark.parametrize("memory_window", [True, False])
    def test_noisy_state_is_a_density_matrix(
        self, free_spin_model: SystemModel, ohmic_bath: BathModel, memory_window: bool
    ) -> None:
        rho = brute_force_rho(free_spin_model, ohmic_bath, 3, 0.1, memory_window=memory_window)
        assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(rho) > -1e-10)

    def test_full_memory_differs_from_window(
        self, free_spin_model: SystemModel, ohmic_bath: BathModel
    ) -> None:
        windowed = brute_force_rho(free_spin_model, ohmic_bath, 3, 0.1)
        full = brute_force_rho(free_spin_model, ohmic_bath, 3, 0.1, memory_window=False)
        assert not np.allclose(windowed, full, atol=1e-14)

    def test_pure_dephasing_matches_closed_form(
        self, ohmic_component: SpectralComponent
    ) -> None:
        dt, n = 0.1, 3
        bath = BathModel(n_sites=1, beta=1.0, tau=0.5, z_components=[[ohmic_component]])
        s = 1 / math.sqrt(2)
        rho = brute_force_rho(SystemModel(n_sites=1), bath, n, dt, MPS.product([np.array([s, s])]))
        t = n * dt

        def integrand(w: float) -> float:
            kernel = 0.5 * t * t if abs(w) < 1e-4 else (1.0 - math.cos(w * t)) / (w * w)
            return eval_spectral_density(bath, Axis.Z, 0, w) * kernel

        gamma = 4.0 / (2 * math.pi) * integrate.quad(
            integrand, -8.0, 8.0, points=[0.0], limit=400, epsabs=1e-13
        )[0]
        assert 2 * rho[0, 1].real == pytest.approx(math.exp(-gamma), rel=1e-8)
        assert rho[0, 0].real == pytest.approx(0.5, abs=1e-13)

    def test_dense_layout_puts_site_zero_first(self) -> None:
        bath = BathModel(n_sites=2, beta=1.0)
        psi = MPS.product([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        rho = brute_force_rho(SystemModel(n_sites=2), bath, 1, 0.1, psi)
        assert rho[1, 1] == pytest.approx(1.0)


class TestGuard:
    def test_variable_count(self) -> None:
        assert path_variable_count(1, 2, 1) == 4
        assert path_variable_count(2, 2, 3) == 2 * (4 + 6)

    def test_step_limit_from_settings(
        self, free_spin_model: SystemModel, quiet_bath: BathModel
    ) -> None:
        with pytest.raises(ValueError, match=r"4\^6"):
            brute_force_rho(free_spin_model, quiet_bath, 4, 0.1)

    def test_limits_are_configurable(
        self,
        free_spin_model: SystemModel,
        quiet_bath: BathModel,
        monkeypatch: pytest.MonkeyPatch,
    ) -> None:
        monkeypatch.setenv("QUAPICHAIN_BRUTE_MAX_STEPS", "4")
        get_settings.cache_clear()
        rho = brute_force_rho(free_spin_model, quiet_bath, 4, 0.1)
        assert np.trace(rho) == pytest.approx(1.0)

    def test_einsum_label_limit(self, mocker) -> None:
        settings = mocker.MagicMock(quapichain_brute_max_sites=10, quapichain_brute_max_steps=10)
        mocker.patch("quapichain.observables.oracle.get_settings", return_value=settings)
        model = SystemModel(n_sites=6)
        bath = BathModel(n_sites=6, beta=1.0)
        assert path_variable_count(6, 8, 1) > MAX_EINSUM_LABELS
        with pytest.raises(ValueError, match="brute force refused"):
            brute_force_rho(model, bath, 8, 0.1)

    def test_step_count_positive(self, free_spin_model: SystemModel, quiet_bath: BathModel) -> None:
        with pytest.raises(ValueError, match=">= 1"):
            brute_force_rho(free_spin_model, quiet_bath, 0, 0.1)
