"""Iterative construction of a site's influence functional as an MPS.

The functional over slices 0..m₂ is kept as two joined pieces: archived
nodes on the left, which no later factor touches, and a window of at most
K_τΔm − 1 live nodes on the right.  Each step appends a node for slice
m₂+1 and applies the MPO Ω carrying every two-point factor that ends on
that slice, then compresses the window.

The bulk path uses the n = ∞ factors and serves every later step count;
:meth:`InfluencePath.finalize` branches off a copy and closes it with the
finite-n factors of the last step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from quapichain.domain.models import CompressionParams
from quapichain.errors import StateError
from quapichain.influence.twopt import SiteContext, two_point_matrix
from quapichain.tn.core import MPO, MPS, apply_and_compress

logger = logging.getLogger(__name__)

_TRIVIAL_NODE = np.ones((1, 4, 1), dtype=np.complex128)


# ── Node factories ──────────────────────────────────────────────────
@dataclass(frozen=True)
class InfluenceNodes:
    """Tensors for the step that ends on slice ``m2``.

    ``start_node`` is the rank-3 diagonal node δ_{b,j}·I(m₂, m₂)(j, j);
    ``w_cores`` are the rank-4 nodes of Ω for m₁ = ``first``..m₂.
    """

    m2: int
    first: int
    start_node: np.ndarray
    w_cores: tuple[np.ndarray, ...]

    @property
    def omega(self) -> MPO:
        return MPO(self.w_cores)


def build_influence_nodes(
    ctx: SiteContext, n: int | None, m2: int, *, terminal: bool = False
) -> InfluenceNodes:
    """Nodes for slice *m2*; *terminal* adds the open output leg of the last slice."""
    first = ctx.layer(n).mu_tau(m2)
    diag = np.diagonal(two_point_matrix(ctx, n, m2, m2)).copy()
    start = np.zeros((4, 4, 1), dtype=np.complex128)
    start[np.arange(4), np.arange(4), 0] = diag

    eye = np.eye(4, dtype=np.complex128)
    cores: list[np.ndarray] = []
    for m1 in range(first, m2):
        table = two_point_matrix(ctx, n, m1, m2)  # [j, b]
        if m1 == first:
            # [1, out, in, b]
            core = np.einsum("jk,jb->jkb", eye, table)[None, ...]
        else:
            # [b, out, in, b']
            core = np.einsum("bc,jk,jb->bjkc", eye, eye, table)
        cores.append(core)

    right = 4 if terminal else 1
    last = np.zeros((4, 4, 4, right), dtype=np.complex128)
    for j in range(4):
        last[j, j, j, j if terminal else 0] = diag[j]
    if not cores:
        # window of a single slice: no bond on the left either
        last = last.sum(axis=0, keepdims=True)
    cores.append(last)
    return InfluenceNodes(m2=m2, first=first, start_node=start, w_cores=tuple(cores))


# ── Paths ───────────────────────────────────────────────────────────
@dataclass(frozen=True)
class TerminalPath:
    """Closed influence functional tail for one step count.

    ``nodes`` run from the first live slice of step *n* to (n+1)Δm; the
    last node's right bond is the output index.  The functional equals
    ``exp(log_scale)`` times the contraction with the archived nodes.
    """

    n: int
    nodes: dict[int, np.ndarray]
    log_scale: float

    @property
    def first(self) -> int:
        return min(self.nodes)

    def node(self, m: int) -> np.ndarray:
        try:
            return self.nodes[m]
        except KeyError:
            raise StateError(f"terminal path for n={self.n} has no node {m}") from None


class InfluencePath:
    """Bulk influence-path iteration for one site (single writer)."""

    def __init__(self, ctx: SiteContext, params: CompressionParams) -> None:
        self.ctx = ctx
        self.params = params
        self.archived: dict[int, np.ndarray] = {}
        self.start = 0
        self.m2 = 0
        self.discarded = 0.0
        self.window = MPS((build_influence_nodes(ctx, None, 0).start_node,))

    @property
    def window_length(self) -> int:
        return self.window.n_sites

    @property
    def log_scale(self) -> float:
        return self.window.log_norm

    def node(self, m: int) -> np.ndarray:
        """Archived node for slice *m*."""
        try:
            return self.archived[m]
        except KeyError:
            raise StateError(f"site {self.ctx.r}: slice {m} is not archived") from None

    def step(self, m2: int) -> float:
        """Advance the window to slice *m2* (must be the next slice)."""
        if m2 != self.m2 + 1:
            raise StateError(f"site {self.ctx.r}: expected slice {self.m2 + 1}, got {m2}")
        self.window, self.start, lost = _extend(
            self.ctx, self.params, None, self.window, self.start, m2, terminal=False
        )
        self.archived.update(_archive(self.ctx, self, m2))
        self.m2 = m2
        self.discarded += lost
        return lost

    def advance_to(self, m2: int) -> float:
        lost = 0.0
        while self.m2 < m2:
            lost += self.step(self.m2 + 1)
        return lost

    def finalize(self, n: int) -> TerminalPath:
        """Close a copy of the window with the finite-n factors of step *n*."""
        dm = self.ctx.delta_m
        if self.m2 != n * dm - 1:
            raise StateError(
                f"site {self.ctx.r}: finalize(n={n}) needs the window at slice {n * dm - 1}, "
                f"it is at {self.m2}"
            )
        window, start = self.window, self.start
        nodes: dict[int, np.ndarray] = {}
        lost = 0.0
        last = (n + 1) * dm
        for m in range(n * dm, last + 1):
            window, start, dropped = _extend(
                self.ctx, self.params, n, window, start, m, terminal=m == last
            )
            lost += dropped
            if m < last:
                next_start = self.ctx.layer(n).mu_tau(m + 1)
                while start < next_start:
                    nodes[start] = window.cores[0]
                    window = MPS(window.cores[1:], window.log_norm)
                    start += 1
        for offset, core in enumerate(window.cores):
            nodes[start + offset] = core
        self.discarded += lost
        return TerminalPath(n=n, nodes=nodes, log_scale=window.log_norm)

    def release_before(self, m: int) -> None:
        """Forget archived nodes below slice *m*."""
        for key in [k for k in self.archived if k < m]:
            del self.archived[key]


def _extend(
    ctx: SiteContext,
    params: CompressionParams,
    n: int | None,
    window: MPS,
    start: int,
    m2: int,
    *,
    terminal: bool,
) -> tuple[MPS, int, float]:
    nodes = build_influence_nodes(ctx, n, m2, terminal=terminal)
    if nodes.first != start:
        raise StateError(f"window starts at slice {start}, step to {m2} needs {nodes.first}")
    extended = MPS((*window.cores, _TRIVIAL_NODE), window.log_norm)
    out, lost = apply_and_compress(nodes.omega, extended, params)
    return out, start, lost


def _archive(ctx: SiteContext, path: InfluencePath, m2: int) -> dict[int, np.ndarray]:
    """Move nodes that the next step no longer touches out of the window."""
    moved: dict[int, np.ndarray] = {}
    next_start = ctx.layer(None).mu_tau(m2 + 1)
    while path.start < next_start:
        moved[path.start] = path.window.cores[0]
        path.window = MPS(path.window.cores[1:], path.window.log_norm)
        path.start += 1
    return moved
