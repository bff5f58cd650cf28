"""Tests for the iterative influence path (``quapichain.influence.path``)."""

from __future__ import annotations

import math

import numpy as np
import pytest

from quapichain.domain.models import BathModel, CompressionParams, SpectralComponent, SystemModel
from quapichain.errors import StateError
from quapichain.influence.path import InfluencePath, build_influence_nodes
from quapichain.influence.twopt import SiteContext, build_site_context, two_point_matrix

DT = 0.1


def _contract(nodes: dict[int, np.ndarray], log_scale: float) -> np.ndarray:
    """Dense tensor ``[j_first, ..., j_last, right]`` of consecutive nodes."""
    keys = sorted(nodes)
    assert keys == list(range(keys[0], keys[-1] + 1))
    t = nodes[keys[0]][0]
    for m in keys[1:]:
        t = np.tensordot(t, nodes[m], axes=([-1], [0]))
    return t * math.exp(log_scale)


def _expected(ctx: SiteContext, n: int | None, n_slices: int) -> np.ndarray:
    """Product of every in-window two-point table over slices 0..n_slices-1."""
    t = np.ones((4,) * n_slices, dtype=np.complex128)
    for m2 in range(n_slices):
        for m1 in range(max(0, m2 - ctx.window), m2 + 1):
            table = two_point_matrix(ctx, n, m1, m2)
            shape = [1] * n_slices
            if m1 == m2:
                shape[m1] = 4
                t = t * np.diagonal(table).reshape(shape)
            else:
                shape[m1] = 4
                shape[m2] = 4
                t = t * table.reshape(shape)
    return t


@pytest.fixture
def z_context(ohmic_bath: BathModel) -> SiteContext:
    return build_site_context(SystemModel(n_sites=1, hx=[1.0]), ohmic_bath, DT, 0)


@pytest.fixture
def yz_context(ohmic_component: SpectralComponent) -> SiteContext:
    bath = BathModel(
        n_sites=1, beta=1.0, y_components=[[ohmic_component]], z_components=[[ohmic_component]]
    )
    return build_site_context(SystemModel(n_sites=1, hx=[0.6]), bath, DT, 0)


# ── Nodes ───────────────────────────────────────────────────────────


class TestNodes:
    def test_start_node_is_diagonal(self, z_context: SiteContext) -> None:
        nodes = build_influence_nodes(z_context, None, 0)
        diag = np.diagonal(two_point_matrix(z_context, None, 0, 0))
        np.testing.assert_allclose(nodes.start_node[:, :, 0], np.diag(diag))
        assert nodes.first == 0
        assert nodes.omega.n_sites == 1

    def test_omega_spans_window(self, z_context: SiteContext) -> None:
        nodes = build_influence_nodes(z_context, None, 6)
        assert nodes.first == 6 - z_context.window
        assert nodes.omega.n_sites == z_context.window + 1

    def test_terminal_node_has_output_leg(self, z_context: SiteContext) -> None:
        nodes = build_influence_nodes(z_context, 2, 3, terminal=True)
        assert nodes.w_cores[-1].shape[-1] == 4


# ── Bulk path ───────────────────────────────────────────────────────


class TestBulkPath:
    def test_matches_dense_product(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        path.advance_to(4)
        got = _contract({**path.archived, **_window_nodes(path)}, path.log_scale)
        np.testing.assert_allclose(got[..., 0], _expected(z_context, None, 5), atol=1e-12)

    def test_archives_out_of_window_slices(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        path.advance_to(5)
        assert path.start == 5 + 1 - z_context.window
        assert sorted(path.archived) == list(range(path.start))
        assert path.window_length == z_context.window

    def test_slices_must_be_consecutive(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        with pytest.raises(StateError, match="expected slice 1"):
            path.step(2)

    def test_release_before(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        path.advance_to(6)
        path.release_before(3)
        assert min(path.archived) == 3
        with pytest.raises(StateError, match="not archived"):
            path.node(1)

    def test_truncation_is_booked(self, yz_context: SiteContext) -> None:
        path = InfluencePath(yz_context, CompressionParams(chi_max=2))
        lost = path.advance_to(8)
        assert lost > 0.0
        assert path.discarded == pytest.approx(lost)
        assert path.window.max_bond() <= 16


# ── Terminal paths ──────────────────────────────────────────────────


class TestFinalize:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_z_terminal_matches_dense_product(
        self, z_context: SiteContext, lossless: CompressionParams, n: int
    ) -> None:
        path = InfluencePath(z_context, lossless)
        path.advance_to(n - 1)
        term = path.finalize(n)
        got = _contract({**path.archived, **term.nodes}, term.log_scale)
        expected = _expected(z_context, n, n + 2)
        np.testing.assert_allclose(got, _with_output(expected), atol=1e-12)

    def test_yz_terminal_matches_dense_product(
        self, yz_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(yz_context, lossless)
        path.advance_to(2)
        term = path.finalize(1)
        got = _contract({**path.archived, **term.nodes}, term.log_scale)
        np.testing.assert_allclose(got, _with_output(_expected(yz_context, 1, 7)), atol=1e-12)

    def test_bulk_path_is_untouched(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        path.advance_to(1)
        before = [c.copy() for c in path.window.cores]
        path.finalize(2)
        assert path.m2 == 1
        for a, b in zip(before, path.window.cores):
            np.testing.assert_array_equal(a, b)

    def test_wrong_step_rejected(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        with pytest.raises(StateError, match="needs the window"):
            path.finalize(3)

    def test_missing_terminal_node(
        self, z_context: SiteContext, lossless: CompressionParams
    ) -> None:
        path = InfluencePath(z_context, lossless)
        term = path.finalize(1)
        with pytest.raises(StateError, match="no node 7"):
            term.node(7)


def _window_nodes(path: InfluencePath) -> dict[int, np.ndarray]:
    return {path.start + i: core for i, core in enumerate(path.window.cores)}


def _with_output(expected: np.ndarray) -> np.ndarray:
    """Append the open output index, a copy of the last slice variable."""
    return np.einsum("...j,jk->...jk", expected, np.eye(4))
