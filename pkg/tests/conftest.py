"""Shared test fixtures for the quapichain test suite.

Everything runs on tiny chains and short memory windows so that the
brute-force path sum stays cheap.
"""

from __future__ import annotations

import numpy as np
import pytest

from quapichain.bath.eta import clear_eta_caches
from quapichain.domain.models import (
    BathModel,
    CompressionParams,
    RunParams,
    SpectralComponent,
    SpectralShape,
    SystemModel,
)
from quapichain.tn.core import MPS


# ── Ensure settings can be loaded in tests ──────────────────────────
@pytest.fixture(autouse=True)
def _inject_env(monkeypatch: pytest.MonkeyPatch) -> None:
    """Pin the process settings so a developer's .env cannot leak in."""
    monkeypatch.setenv("QUAPICHAIN_LOG_LEVEL", "WARNING")
    monkeypatch.setenv("QUAPICHAIN_THREADS", "1")
    monkeypatch.setenv("QUAPICHAIN_SNAPSHOT_EVERY", "0")
    monkeypatch.setenv("QUAPICHAIN_BRUTE_MAX_SITES", "2")
    monkeypatch.setenv("QUAPICHAIN_BRUTE_MAX_STEPS", "3")

    # Clear the lru_cache so each test sees fresh settings.
    from quapichain.config import get_settings

    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def _fresh_eta_caches() -> None:
    clear_eta_caches()


# ── Models ──────────────────────────────────────────────────────────
@pytest.fixture
def free_spin_model() -> SystemModel:
    """Single spin precessing about x with h_x = 1."""
    return SystemModel(n_sites=1, hx=[1.0])


@pytest.fixture
def ohmic_component() -> SpectralComponent:
    return SpectralComponent(
        shape=SpectralShape.OHMIC, strength=0.1, omega_c=1.0, w_ir=0.0, w_uv=8.0
    )


@pytest.fixture
def quiet_bath() -> BathModel:
    return BathModel(n_sites=1, beta=1.0)


@pytest.fixture
def ohmic_bath(ohmic_component: SpectralComponent) -> BathModel:
    """z-noise on a single site, memory of three steps."""
    return BathModel(n_sites=1, beta=1.0, tau=0.0, z_components=[[ohmic_component]])


@pytest.fixture
def lossless() -> CompressionParams:
    return CompressionParams(chi_max=None, eps_trunc=0.0)


@pytest.fixture
def run_params(lossless: CompressionParams) -> RunParams:
    return RunParams(dt=0.1, n_steps=3, compression=lossless)


@pytest.fixture
def small_random_mps() -> MPS:
    """Three sites, physical dim 4, bonds (3, 2), seeded."""
    rng = np.random.default_rng(7)
    shapes = [(1, 4, 3), (3, 4, 2), (2, 4, 1)]
    return MPS(tuple(rng.normal(size=s) + 1j * rng.normal(size=s) for s in shapes))
