"""Trotter quadrature weights and model diagnostics.

``n=None`` selects the semi-infinite (bulk) weights used by the ⊢ branch of
the evolution: the left boundary is kept, the right one never arrives.
"""

from __future__ import annotations

import math

from quapichain.domain.models import SystemModel, TimeScalar


def eval_scalar(s: TimeScalar, t: float) -> float:
    """Evaluate *s* at time *t*; raises ``ValueError`` outside its sampled range."""
    return s.at(t)


def trotter_weight_w(n: int | None, k: int) -> float:
    """Composite-trapezoid weight w_{n;k} on the integer time grid.

    Parameters
    ----------
    n
        Step count (≥ 1), or ``None`` for the bulk weights.
    k
        Slice index, ``-1 ≤ k ≤ n+1`` (``k ≥ -1`` in the bulk).
    """
    if n is None:
        if k < -1:
            raise IndexError(f"bulk weight index must be >= -1, got {k}")
        if k == -1:
            return 0.0
        return 0.5 if k == 0 else 1.0
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    if not -1 <= k <= n + 1:
        raise IndexError(f"w index {k} out of range [-1, {n + 1}]")
    if k in (-1, n + 1):
        return 0.0
    if k in (0, n):
        return 0.5
    return 1.0


def trotter_weight_wtilde(n: int | None, l: int) -> float:  # noqa: E741
    """Half-step weight w̃_{n;l} on the doubled grid ``0 ≤ l ≤ 2n+1``."""
    if n is None:
        if l < 0:
            raise IndexError(f"bulk half-step index must be >= 0, got {l}")
        return 0.25 if l in (0, 1) else 0.5
    if n < 1:
        raise ValueError(f"step count must be >= 1, got {n}")
    if not 0 <= l <= 2 * n + 1:
        raise IndexError(f"w-tilde index {l} out of range [0, {2 * n + 1}]")
    if l in (0, 1, 2 * n, 2 * n + 1):
        return 0.25
    return 0.5


def validate_model(m: SystemModel) -> list[str]:
    """Return human-readable violations; an empty list means valid."""
    problems: list[str] = []
    for name in ("hx", "hz", "jzz"):
        for r, scalar in enumerate(getattr(m, name)):
            if not all(math.isfinite(v) for v in scalar.samples()):
                problems.append(f"{name}[{r}] has non-finite samples")
    if not m.jzz[-1].is_zero():
        problems.append(f"jzz[{m.n_sites - 1}] is the open boundary coupler and must be zero")
    return problems
