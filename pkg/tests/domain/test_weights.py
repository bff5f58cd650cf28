"""Tests for Trotter weights and model diagnostics (``quapichain.domain.weights``)."""

from __future__ import annotations

import pytest

from quapichain.domain.models import SystemModel
from quapichain.domain.weights import trotter_weight_w, trotter_weight_wtilde, validate_model


class TestTrotterWeights:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_w_sums_to_step_count(self, n: int) -> None:
        assert sum(trotter_weight_w(n, k) for k in range(-1, n + 2)) == pytest.approx(n)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_wtilde_sums_to_step_count(self, n: int) -> None:
        assert sum(trotter_weight_wtilde(n, l) for l in range(2 * n + 2)) == pytest.approx(n)

    def test_w_boundaries(self) -> None:
        assert trotter_weight_w(3, -1) == 0.0
        assert trotter_weight_w(3, 0) == 0.5
        assert trotter_weight_w(3, 1) == 1.0
        assert trotter_weight_w(3, 3) == 0.5
        assert trotter_weight_w(3, 4) == 0.0

    def test_bulk_keeps_left_edge_only(self) -> None:
        assert trotter_weight_w(None, 0) == 0.5
        assert trotter_weight_w(None, 50) == 1.0
        assert trotter_weight_wtilde(None, 1) == 0.25
        assert trotter_weight_wtilde(None, 40) == 0.5

    def test_out_of_range(self) -> None:
        with pytest.raises(IndexError):
            trotter_weight_w(2, 4)
        with pytest.raises(IndexError):
            trotter_weight_wtilde(2, 6)


class TestValidateModel:
    def test_clean_model(self) -> None:
        assert validate_model(SystemModel(n_sites=2, hx=[1.0, 1.0], jzz=[0.5])) == []

    def test_boundary_coupler_flagged(self) -> None:
        problems = validate_model(SystemModel(n_sites=2, jzz=[0.5, 0.3]))
        assert any("boundary" in p for p in problems)

    def test_non_finite_flagged(self) -> None:
        problems = validate_model(SystemModel(n_sites=1, hx=[float("nan")]))
        assert problems == ["hx[0] has non-finite samples"]
