"""Dense matrix-product-state / operator engine.

MPS cores are ``[left, phys, right]`` and MPO cores ``[left, out, in,
right]``, all complex128.  An MPS represents ``exp(log_norm)`` times the
contraction of its cores, so compressions can renormalize the cores to unit
norm without losing the physical scale.

Outer bonds may be larger than 1: influence windows hang off an archived
segment on the left and end in an open physical-like bond on the right.
Compression only ever touches internal bonds.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from quapichain.domain.models import CompressionMethod, CompressionParams
from quapichain.errors import NumericalError

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest count as exact zeros.
NUMERICAL_ZERO = 1e-14
# Singular values closer than this fraction of the largest are degenerate.
TIE_TOLERANCE = 1e-12


# ── Containers ──────────────────────────────────────────────────────
@dataclass(frozen=True)
class MPS:
    cores: tuple[np.ndarray, ...]
    log_norm: float = 0.0

    def __post_init__(self) -> None:
        cores = tuple(np.asarray(c, dtype=np.complex128) for c in self.cores)
        if not cores:
            raise ValueError("an MPS needs at least one core")
        for i, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"MPS core {i} must be rank 3, got shape {c.shape}")
        for i, (a, b) in enumerate(zip(cores, cores[1:])):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch between cores {i} and {i + 1}")
        object.__setattr__(self, "cores", cores)

    @property
    def n_sites(self) -> int:
        return len(self.cores)

    @property
    def phys_dims(self) -> list[int]:
        return [c.shape[1] for c in self.cores]

    @property
    def bond_dims(self) -> list[int]:
        """Internal bond extents (length ``n_sites - 1``)."""
        return [c.shape[2] for c in self.cores[:-1]]

    @property
    def outer_dims(self) -> tuple[int, int]:
        return self.cores[0].shape[0], self.cores[-1].shape[2]

    def max_bond(self) -> int:
        dims = [*self.bond_dims, *self.outer_dims]
        return max(dims)

    def replace(self, cores: Sequence[np.ndarray], log_norm: float | None = None) -> MPS:
        return MPS(tuple(cores), self.log_norm if log_norm is None else log_norm)

    @classmethod
    def product(cls, vectors: Sequence[np.ndarray]) -> MPS:
        """Bond-1 MPS from one vector per site."""
        return cls(tuple(np.asarray(v, dtype=np.complex128).reshape(1, -1, 1) for v in vectors))


@dataclass(frozen=True)
class MPO:
    cores: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        cores = tuple(np.asarray(c, dtype=np.complex128) for c in self.cores)
        for i, c in enumerate(cores):
            if c.ndim != 4:
                raise ValueError(f"MPO core {i} must be rank 4, got shape {c.shape}")
        for i, (a, b) in enumerate(zip(cores, cores[1:])):
            if a.shape[3] != b.shape[0]:
                raise ValueError(f"bond mismatch between MPO cores {i} and {i + 1}")
        object.__setattr__(self, "cores", cores)

    @property
    def n_sites(self) -> int:
        return len(self.cores)

    @classmethod
    def identity(cls, phys_dims: Sequence[int]) -> MPO:
        return cls(tuple(np.eye(d, dtype=np.complex128).reshape(1, d, d, 1) for d in phys_dims))


@dataclass(frozen=True)
class Factorization:
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float = field(default=0.0)


# ── Factorizations ──────────────────────────────────────────────────
def _svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not np.all(np.isfinite(m)):
        raise NumericalError("cannot factorize a matrix with non-finite entries")
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        logger.debug("gesdd failed on %s matrix, retrying with gesvd", m.shape)
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"SVD failed on a {m.shape} matrix: {exc}") from exc


def _keep_count(s: np.ndarray, chi_max: int | None, eps_trunc: float) -> int:
    total = float(np.sum(s**2))
    if total == 0.0:
        return 1
    numeric_rank = max(1, int(np.sum(s > NUMERICAL_ZERO * s[0])))
    # tail[k] = weight of the values from index k on
    tail = np.concatenate([np.cumsum((s**2)[::-1])[::-1], [0.0]])
    k = int(np.argmax(tail <= eps_trunc**2 * total))
    k = max(1, min(k, numeric_rank))
    if chi_max is not None:
        k = min(k, chi_max)

    tol = TIE_TOLERANCE * s[0]
    if k < numeric_rank and s[k - 1] - s[k] <= tol:
        end = k
        while end < numeric_rank and s[end - 1] - s[end] <= tol:
            end += 1
        if chi_max is None or end <= chi_max:
            return end
        start = k - 1
        while start > 0 and s[start - 1] - s[start] <= tol:
            start -= 1
        if start >= 1:
            return start
    return k


def truncated_factorization(
    m: np.ndarray, chi_max: int | None = None, eps_trunc: float = 0.0
) -> Factorization:
    """SVD ``m ≈ left · diag(s) · right`` keeping a multiplet-respecting rank.

    The kept rank is the smallest whose dropped tail carries at most
    ``eps_trunc²`` of the squared norm, capped by ``chi_max``.
    """
    u, s, vh = _svd(np.asarray(m, dtype=np.complex128))
    k = _keep_count(s, chi_max, eps_trunc)
    total = float(np.sum(s**2))
    discarded = float(np.sum(s[k:] ** 2)) / total if total > 0 else 0.0
    return Factorization(u[:, :k], s[:k], vh[:k], discarded)


# ── Gauge sweeps ────────────────────────────────────────────────────
def _left_sweep(cores: list[np.ndarray], stop: int) -> None:
    """QR-orthonormalize cores ``0..stop-1`` in place, pushing R rightward."""
    for i in range(stop):
        l, d, r = cores[i].shape
        q, rr = np.linalg.qr(cores[i].reshape(l * d, r))
        cores[i] = q.reshape(l, d, -1)
        cores[i + 1] = np.einsum("ab,bjc->ajc", rr, cores[i + 1])


def _right_sweep(cores: list[np.ndarray], stop: int) -> None:
    """LQ-orthonormalize cores ``n-1..stop+1`` in place, pushing L leftward."""
    for i in range(len(cores) - 1, stop, -1):
        l, d, r = cores[i].shape
        q, rr = np.linalg.qr(cores[i].reshape(l, d * r).T)
        cores[i] = q.T.reshape(-1, d, r)
        cores[i - 1] = np.einsum("ajb,cb->ajc", cores[i - 1], rr)


def left_canonical(s: MPS) -> MPS:
    """Every core but the last becomes a left isometry."""
    cores = list(s.cores)
    _left_sweep(cores, s.n_sites - 1)
    return s.replace(cores)


def right_canonical(s: MPS) -> MPS:
    """Every core but the first becomes a right isometry."""
    cores = list(s.cores)
    _right_sweep(cores, 0)
    return s.replace(cores)


def _truncating_sweep_left(
    cores: list[np.ndarray], chi_max: int | None, eps_trunc: float
) -> float:
    """Right-to-left truncating SVD sweep; the norm ends up in core 0."""
    discarded = 0.0
    for i in range(len(cores) - 1, 0, -1):
        l, d, r = cores[i].shape
        f = truncated_factorization(cores[i].reshape(l, d * r), chi_max, eps_trunc)
        cores[i] = f.right.reshape(-1, d, r)
        cores[i - 1] = np.einsum("ajb,bc->ajc", cores[i - 1], f.left * f.singular_values)
        discarded += f.discarded_weight
    return discarded


def _truncating_sweep_right(
    cores: list[np.ndarray], chi_max: int | None, eps_trunc: float
) -> float:
    discarded = 0.0
    for i in range(len(cores) - 1):
        l, d, r = cores[i].shape
        f = truncated_factorization(cores[i].reshape(l * d, r), chi_max, eps_trunc)
        cores[i] = f.left.reshape(l, d, -1)
        cores[i + 1] = np.einsum("ab,bjc->ajc", f.singular_values[:, None] * f.right, cores[i + 1])
        discarded += f.discarded_weight
    return discarded


def _finish(s: MPS, cores: list[np.ndarray], reference: float, p: CompressionParams) -> MPS:
    """Normalize core 0 and book the scale into the log-norm ledger."""
    nrm = float(np.linalg.norm(cores[0]))
    if nrm == 0.0 or not math.isfinite(nrm):
        if not math.isfinite(nrm):
            raise NumericalError("compression produced a non-finite norm")
        return s.replace(cores)
    cores[0] = cores[0] / nrm
    kept = reference if p.renormalize and reference > 0 else nrm
    return s.replace(cores, s.log_norm + math.log(kept))


# ── Public operations ───────────────────────────────────────────────
def apply_mpo(o: MPO, s: MPS) -> MPS:
    """Exact product; bond extents multiply, outer bonds are fused (MPO-major)."""
    if o.n_sites != s.n_sites:
        raise ValueError(f"MPO has {o.n_sites} sites, MPS has {s.n_sites}")
    out = []
    for i, (w, m) in enumerate(zip(o.cores, s.cores)):
        if w.shape[2] != m.shape[1]:
            raise ValueError(f"site {i}: MPO input dim {w.shape[2]} != MPS phys dim {m.shape[1]}")
        t = np.einsum("lojr,ajb->laorb", w, m)
        lw, la, do, rw, rb = t.shape
        out.append(t.reshape(lw * la, do, rw * rb))
    return MPS(tuple(out), s.log_norm)


def compress(s: MPS, p: CompressionParams) -> tuple[MPS, float]:
    """Truncate internal bonds; returns the new MPS and the summed discarded weight."""
    cores = list(s.cores)
    if p.method is CompressionMethod.ZIPUP:
        _right_sweep(cores, 0)
        reference = float(np.linalg.norm(cores[0]))
        discarded = _truncating_sweep_right(cores, p.chi_max, p.eps_trunc / 10.0)
    else:
        _left_sweep(cores, s.n_sites - 1)
        reference = float(np.linalg.norm(cores[-1]))
        discarded = 0.0
    discarded += _truncating_sweep_left(cores, p.chi_max, p.eps_trunc)
    return _finish(s, cores, reference, p), discarded


def _zipup(o: MPO, s: MPS, p: CompressionParams) -> tuple[MPS, float]:
    if o.n_sites != s.n_sites:
        raise ValueError(f"MPO has {o.n_sites} sites, MPS has {s.n_sites}")
    src = list(s.cores)
    _right_sweep(src, 0)
    reference_scale = float(np.linalg.norm(src[0]))
    if reference_scale > 0:
        src[0] = src[0] / reference_scale
    lw, la = o.cores[0].shape[0], src[0].shape[0]
    carry = np.eye(lw * la, dtype=np.complex128).reshape(lw * la, lw, la)
    out: list[np.ndarray] = []
    discarded = 0.0
    loose = p.eps_trunc / 10.0
    for i, (w, m) in enumerate(zip(o.cores, src)):
        if w.shape[2] != m.shape[1]:
            raise ValueError(f"site {i}: MPO input dim {w.shape[2]} != MPS phys dim {m.shape[1]}")
        t = np.einsum("kla,lojr,ajb->korb", carry, w, m)
        k, d, rw, rb = t.shape
        if i == len(src) - 1:
            out.append(t.reshape(k, d, rw * rb))
            break
        f = truncated_factorization(t.reshape(k * d, rw * rb), p.chi_max, loose)
        out.append(f.left.reshape(k, d, -1))
        carry = (f.singular_values[:, None] * f.right).reshape(-1, rw, rb)
        discarded += f.discarded_weight
    # out[:-1] are left isometries, so the last core carries the norm
    reference = float(np.linalg.norm(out[-1]))
    discarded += _truncating_sweep_left(out, p.chi_max, p.eps_trunc)
    offset = math.log(reference_scale) if reference_scale > 0 else 0.0
    shifted = MPS(tuple(out), s.log_norm + offset)
    return _finish(shifted, out, reference, p), discarded


def apply_and_compress(o: MPO, s: MPS, p: CompressionParams) -> tuple[MPS, float]:
    """``compress(apply_mpo(o, s))`` or the fused zip-up, per ``p.method``."""
    if p.method is CompressionMethod.ZIPUP:
        return _zipup(o, s, p)
    return compress(apply_mpo(o, s), p)


def contract_with_config(
    s: MPS, config: Sequence[int], bonds: tuple[int, int] = (0, 0)
) -> complex:
    """Amplitude of one physical configuration (outer bonds pinned by *bonds*)."""
    if len(config) != s.n_sites:
        raise IndexError(f"config has {len(config)} entries for {s.n_sites} sites")
    left, right = s.outer_dims
    if not (0 <= bonds[0] < left and 0 <= bonds[1] < right):
        raise IndexError(f"outer bond indices {bonds} out of range {(left, right)}")
    vec = np.zeros(left, dtype=np.complex128)
    vec[bonds[0]] = 1.0
    for i, (core, j) in enumerate(zip(s.cores, config)):
        if not 0 <= j < core.shape[1]:
            raise IndexError(f"index {j} out of range at site {i}")
        vec = vec @ core[:, j, :]
    return complex(vec[bonds[1]] * math.exp(s.log_norm))


def to_dense(s: MPS) -> np.ndarray:
    """Full tensor ``[left, phys_0, ..., phys_{n-1}, right]`` including the ledger."""
    t = s.cores[0]
    for c in s.cores[1:]:
        t = np.tensordot(t, c, axes=([-1], [0]))
    return t * math.exp(s.log_norm)


def norm(s: MPS) -> float:
    env = np.eye(s.cores[0].shape[0], dtype=np.complex128)
    for c in s.cores:
        env = np.einsum("ab,ajc,bjd->cd", env, c, c.conj())
    return math.sqrt(max(float(np.trace(env).real), 0.0)) * math.exp(s.log_norm)


def schmidt_at_bond(s: MPS, r: int) -> np.ndarray:
    """Schmidt values across the cut between sites ``r-1`` and ``r``."""
    if not 1 <= r <= s.n_sites - 1:
        raise ValueError(f"bond {r} out of range [1, {s.n_sites - 1}]")
    cores = list(s.cores)
    _left_sweep(cores, s.n_sites - 1)
    # sites r.. become right isometries; what is left over is the bond matrix
    for i in range(s.n_sites - 1, r - 1, -1):
        l, d, rr = cores[i].shape
        q, lower = np.linalg.qr(cores[i].reshape(l, d * rr).T)
        cores[i] = q.T.reshape(-1, d, rr)
        if i > r:
            cores[i - 1] = np.einsum("ajb,cb->ajc", cores[i - 1], lower)
        else:
            bond = lower.T
    values = np.linalg.svd(bond, compute_uv=False)
    return np.sort(values)[::-1] * math.exp(s.log_norm)
