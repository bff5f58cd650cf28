"""Tests for run models (``quapichain.domain.models``)."""

from __future__ import annotations

import math

import pytest
from pydantic import ValidationError

from quapichain.domain.models import (
    Axis,
    BathModel,
    CompressionParams,
    InitialState,
    InitialStateKind,
    RunConfig,
    ScalarKind,
    SpectralComponent,
    SpectralShape,
    SystemModel,
    TimeScalar,
)


# ── TimeScalar ───────────────────────────────────────────────────────────────


class TestTimeScalar:
    def test_bare_number_is_constant(self) -> None:
        s = TimeScalar.model_validate(2.5)
        assert s.kind is ScalarKind.CONSTANT
        assert s.at(0.0) == 2.5
        assert s.at(100.0) == 2.5

    def test_piecewise_interpolates(self) -> None:
        s = TimeScalar(kind=ScalarKind.PIECEWISE, times=[0.0, 1.0], values=[0.0, 2.0])
        assert s.at(0.25) == pytest.approx(0.5)

    def test_piecewise_outside_range_raises(self) -> None:
        s = TimeScalar(kind=ScalarKind.PIECEWISE, times=[0.0, 1.0], values=[0.0, 2.0])
        with pytest.raises(ValueError, match="outside sampled range"):
            s.at(1.5)

    def test_tabulated_grid(self) -> None:
        s = TimeScalar(kind=ScalarKind.TABULATED, step=0.5, values=[1.0, 3.0, 5.0])
        assert s.at(0.5) == 3.0
        assert s.at(0.75) == pytest.approx(4.0)

    def test_negative_time_raises(self) -> None:
        with pytest.raises(ValueError, match="non-negative"):
            TimeScalar.constant(1.0).at(-0.1)

    def test_unsorted_piecewise_rejected(self) -> None:
        with pytest.raises(ValidationError):
            TimeScalar(kind=ScalarKind.PIECEWISE, times=[1.0, 0.0], values=[0.0, 1.0])


# ── SystemModel ──────────────────────────────────────────────────────────────


class TestSystemModel:
    def test_defaults_fill_zeros(self) -> None:
        m = SystemModel(n_sites=3, hx=[1.0, 1.0, 1.0])
        hx, hz, jzz = m.fields_at(0.0)
        assert list(hx) == [1.0, 1.0, 1.0]
        assert list(hz) == [0.0, 0.0, 0.0]
        assert list(jzz) == [0.0, 0.0, 0.0]

    def test_short_coupler_list_is_padded(self) -> None:
        m = SystemModel(n_sites=2, jzz=[0.7])
        assert len(m.jzz) == 2
        assert m.jzz[-1].is_zero()

    def test_wrong_length_rejected(self) -> None:
        with pytest.raises(ValidationError, match="hx must have"):
            SystemModel(n_sites=2, hx=[1.0, 1.0, 1.0])

    def test_frozen(self) -> None:
        m = SystemModel(n_sites=1)
        with pytest.raises(ValidationError):
            m.n_sites = 2  # type: ignore[misc]


# ── Spectral components and baths ────────────────────────────────────────────


class TestSpectralComponent:
    def test_ohmic_needs_cutoff(self) -> None:
        with pytest.raises(ValidationError, match="omega_c"):
            SpectralComponent(shape=SpectralShape.OHMIC, strength=1.0, w_uv=5.0)

    def test_ohmic_slope_is_strength(self, ohmic_component: SpectralComponent) -> None:
        assert ohmic_component.slope_at_zero == pytest.approx(0.1)
        assert ohmic_component.zero_temperature(1.0) == pytest.approx(0.1 * math.exp(-1.0))

    def test_tabulated_is_clamped_and_interpolated(self) -> None:
        c = SpectralComponent(
            shape=SpectralShape.TABULATED, w_uv=2.0, omegas=[0.0, 1.0, 2.0], values=[0.0, 1.0, 0.0]
        )
        assert c.zero_temperature(1.0) == pytest.approx(1.0)
        assert c.zero_temperature(5.0) == 0.0
        # monotone cubic end slope from the first two secants
        assert c.slope_at_zero == pytest.approx(2.0, rel=1e-3)

    def test_expression(self) -> None:
        c = SpectralComponent(shape=SpectralShape.EXPRESSION, w_uv=3.0, expression="2*w*exp(-w)")
        assert c.zero_temperature(1.0) == pytest.approx(2.0 * math.exp(-1.0))
        assert c.slope_at_zero == pytest.approx(2.0, rel=1e-4)

    def test_band_must_be_ordered(self) -> None:
        with pytest.raises(ValidationError, match="w_ir"):
            SpectralComponent(shape=SpectralShape.OHMIC, omega_c=1.0, w_ir=3.0, w_uv=2.0)


class TestBathModel:
    def test_noise_and_slices(self, ohmic_component: SpectralComponent) -> None:
        b = BathModel(n_sites=1, beta=1.0, y_components=[[ohmic_component]])
        assert b.has_noise(Axis.Y, 0)
        assert not b.has_noise(Axis.Z, 0)
        assert b.uniform_delta_m() == 3

    def test_mixed_slices_rejected(self, ohmic_component: SpectralComponent) -> None:
        b = BathModel(n_sites=2, beta=1.0, y_components=[[ohmic_component], []])
        with pytest.raises(ValueError, match="every site or on none"):
            b.uniform_delta_m()

    def test_beta_must_be_positive(self) -> None:
        with pytest.raises(ValidationError, match="beta"):
            BathModel(n_sites=1, beta=0.0)

    def test_fingerprint_tracks_content(self, ohmic_bath: BathModel) -> None:
        other = ohmic_bath.model_copy(update={"beta": 2.0})
        assert ohmic_bath.fingerprint() != other.fingerprint()
        assert ohmic_bath.fingerprint() == ohmic_bath.model_copy().fingerprint()


# ── Run parameters ───────────────────────────────────────────────────────────


class TestRunConfig:
    def test_bath_inherits_chain_length(self) -> None:
        cfg = RunConfig.model_validate(
            {
                "model": {"n_sites": 2, "hx": [1.0, 1.0]},
                "bath": {"beta": 1.0},
                "run": {"dt": 0.1, "n_steps": 2},
            }
        )
        assert cfg.bath.n_sites == 2
        assert cfg.observables == ["Z0"]

    def test_site_mismatch_rejected(self) -> None:
        with pytest.raises(ValidationError, match="n_sites"):
            RunConfig.model_validate(
                {
                    "model": {"n_sites": 2},
                    "bath": {"n_sites": 1, "beta": 1.0},
                    "run": {"dt": 0.1, "n_steps": 2},
                }
            )

    def test_unknown_spinor_rejected(self) -> None:
        with pytest.raises(ValidationError, match="unknown spinor"):
            InitialState(states=["sideways"])

    def test_npz_needs_path(self) -> None:
        with pytest.raises(ValidationError, match="needs a path"):
            InitialState(kind=InitialStateKind.NPZ)

    def test_compression_bounds(self) -> None:
        with pytest.raises(ValidationError):
            CompressionParams(eps_trunc=1.0)
        with pytest.raises(ValidationError):
            CompressionParams(chi_max=0)
