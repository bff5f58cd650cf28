"""Tests for base-4 path variables and slice layout (``quapichain.influence.base4``)."""

from __future__ import annotations

import pytest

from quapichain.domain.models import Axis
from quapichain.influence.base4 import (
    bar,
    base4_index,
    g_alpha,
    layer_maps,
    slice_of,
    spin_pair,
)


class TestEncoding:
    @pytest.mark.parametrize(
        ("j", "pair"), [(0, (1, 1)), (1, (1, -1)), (2, (-1, 1)), (3, (-1, -1))]
    )
    def test_case_table(self, j: int, pair: tuple[int, int]) -> None:
        assert spin_pair(j) == pair
        assert base4_index(*pair) == j

    def test_bar_swaps_branches(self) -> None:
        for j in range(4):
            plus, minus = spin_pair(j)
            assert spin_pair(bar(j)) == (minus, plus)

    def test_out_of_range(self) -> None:
        with pytest.raises(ValueError, match="0..3"):
            g_alpha(1, 4)
        with pytest.raises(ValueError, match="alpha"):
            g_alpha(0, 1)


class TestLayerMap:
    def test_z_only_layout(self) -> None:
        layer = layer_maps(4, has_y_noise=False, k_tau=3)
        assert layer.delta_m == 1
        assert [layer.q_tilde(m) for m in range(5)] == [0, 1, 2, 3, 4]
        assert all(layer.nu_tilde(m) is Axis.Z for m in range(5))
        assert layer.q_y == -1
        assert layer.q_z == 5
        assert layer.last_slice == 5

    def test_three_slice_layout(self) -> None:
        layer = layer_maps(2, has_y_noise=True, k_tau=3)
        axes = [layer.nu_tilde(m) for m in range(7)]
        assert axes == [Axis.Z, Axis.Y, Axis.Y, Axis.Z, Axis.Y, Axis.Y, Axis.Z]
        assert [layer.q_tilde(m) for m in range(7)] == [0, 0, 1, 1, 2, 3, 2]
        assert layer.q_y == 5
        assert layer.last_slice == 9

    def test_slice_of_inverts_layout(self) -> None:
        layer = layer_maps(3, has_y_noise=True, k_tau=4)
        for m in range(12):
            assert slice_of(layer.nu_tilde(m), layer.q_tilde(m), 3) == m

    def test_y_slices_need_three_per_step(self) -> None:
        with pytest.raises(ValueError, match="three slices"):
            slice_of(Axis.Y, 1, 1)

    def test_memory_window_start(self) -> None:
        layer = layer_maps(None, has_y_noise=True, k_tau=3)
        assert layer.mu_tau(5) == 0
        assert layer.mu_tau(8) == 0
        assert layer.mu_tau(9) == 1
        assert layer.last_slice is None

    def test_step_count_positive(self) -> None:
        with pytest.raises(ValueError, match=">= 1"):
            layer_maps(0, has_y_noise=False, k_tau=3)
