"""Evolution MPOs built from influence nodes and slice phases.

Each site core of a transfer MPO swallows the influence nodes of one time
step: all but the last slice are summed out, the last slice meets the phase
of its z slice, and the bonds on either side become the MPO's input and
output legs.  The MPO bond is the phase MPS bond.
"""

from __future__ import annotations

from collections.abc import Sequence
from enum import Enum
from typing import Protocol

import numpy as np

from quapichain.domain.models import SystemModel
from quapichain.errors import StateError
from quapichain.evolution.phase import build_phase_mps
from quapichain.tn.core import MPO


class TransferKind(str, Enum):
    VDASH_I = "vdash_i"  # ⊢ branch, first slice
    VDASH_K = "vdash_k"  # ⊢ branch, step k
    N_I = "n_i"  # step-n branch, first slice
    N_K = "n_k"  # step-n branch, step k
    N_F = "n_f"  # step-n branch, last step (open output leg)


class NodeSource(Protocol):
    def node(self, m: int) -> np.ndarray: ...


def site_core(nodes: Sequence[np.ndarray], phase_core: np.ndarray) -> np.ndarray:
    """``[c, out, in, c']`` core from a run of influence nodes and one phase node."""
    if not nodes:
        raise StateError("a transfer core needs at least one influence node")
    through = None
    for node in nodes[:-1]:
        summed = node.sum(axis=1)
        through = summed if through is None else through @ summed
    last = nodes[-1]
    if through is not None:
        last = np.einsum("ab,bjc->ajc", through, last)
    return np.einsum("ijo,cjd->coid", last, phase_core)


def transfer_slices(kind: TransferKind, delta_m: int, n: int | None, k: int | None) -> list[int]:
    if kind in (TransferKind.VDASH_I, TransferKind.N_I):
        return [0]
    step = n if kind is TransferKind.N_F else k
    if step is None:
        raise ValueError(f"{kind.value} needs a step index")
    return list(range(step * delta_m + 1, (step + 1) * delta_m + 1))


def build_transfer_mpo(
    kind: TransferKind,
    sources: Sequence[NodeSource],
    model: SystemModel,
    dt: float,
    delta_m: int,
    n: int | None = None,
    k: int | None = None,
) -> MPO:
    """One of the five evolution MPOs.

    ``sources[r]`` supplies site r's nodes: the bulk path for the ⊢ kinds,
    the terminal path of step *n* for the others.
    """
    bulk = kind in (TransferKind.VDASH_I, TransferKind.VDASH_K)
    if not bulk and n is None:
        raise ValueError(f"{kind.value} needs the step count n")
    if kind is TransferKind.N_F:
        phase_slice = n + 1  # type: ignore[operator]
    elif kind in (TransferKind.VDASH_I, TransferKind.N_I):
        phase_slice = 0
    else:
        if k is None:
            raise ValueError(f"{kind.value} needs a step index")
        phase_slice = k + 1
    phase = build_phase_mps(model, None if bulk else n, phase_slice, dt)
    slices = transfer_slices(kind, delta_m, n, k)
    cores = [
        site_core([src.node(m) for m in slices], phase.cores[r]) for r, src in enumerate(sources)
    ]
    return MPO(tuple(cores))
