"""Pydantic v2 domain models for quapichain.

Every structured input (time-dependent couplings, the Ising chain, the
bosonic baths, compression settings and the run configuration) is a frozen
Pydantic model here.  The numerical packages consume these types only.
"""

from __future__ import annotations

import hashlib
import math
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy.interpolate import PchipInterpolator

_RANGE_TOL = 1e-12


# ── Enums ───────────────────────────────────────────────────────────
class ScalarKind(str, Enum):
    CONSTANT = "constant"
    PIECEWISE = "piecewise"
    TABULATED = "tabulated"


class Axis(str, Enum):
    """Spin component a bath couples to."""

    Y = "y"
    Z = "z"


class SpectralShape(str, Enum):
    OHMIC = "ohmic"
    TABULATED = "tabulated"
    EXPRESSION = "expression"


class CompressionMethod(str, Enum):
    DIRECT = "direct"
    ZIPUP = "zipup"


class InitialStateKind(str, Enum):
    PRODUCT = "product"
    RANDOM_PRODUCT = "random_product"
    NPZ = "npz"


# ── Time-dependent scalars ──────────────────────────────────────────
class TimeScalar(BaseModel):
    """A real model parameter sampled as a function of time.

    A bare number in config is accepted as shorthand for a constant.
    """

    model_config = ConfigDict(frozen=True)

    kind: ScalarKind = ScalarKind.CONSTANT
    value: float = 0.0
    times: list[float] = Field(default_factory=list)
    values: list[float] = Field(default_factory=list)
    t0: float = 0.0
    step: float | None = None

    @model_validator(mode="before")
    @classmethod
    def _coerce_number(cls, data: Any) -> Any:
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            return {"kind": ScalarKind.CONSTANT, "value": float(data)}
        return data

    @model_validator(mode="after")
    def _check_payload(self) -> TimeScalar:
        if self.kind is ScalarKind.PIECEWISE:
            if not self.times or len(self.times) != len(self.values):
                raise ValueError("piecewise scalar needs equally long, non-empty times and values")
            if any(b < a for a, b in zip(self.times, self.times[1:])):
                raise ValueError("piecewise sample times must be sorted")
        elif self.kind is ScalarKind.TABULATED:
            if self.step is None or self.step <= 0:
                raise ValueError("tabulated scalar needs a positive step")
            if not self.values:
                raise ValueError("tabulated scalar needs at least one value")
        return self

    @classmethod
    def constant(cls, value: float) -> TimeScalar:
        return cls(kind=ScalarKind.CONSTANT, value=value)

    def samples(self) -> list[float]:
        """Every stored number (used for finiteness diagnostics)."""
        if self.kind is ScalarKind.CONSTANT:
            return [self.value]
        return list(self.values)

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.samples())

    def at(self, t: float) -> float:
        """Evaluate at time *t* (see :func:`quapichain.domain.weights.eval_scalar`)."""
        if t < 0:
            raise ValueError(f"time must be non-negative, got {t}")
        if self.kind is ScalarKind.CONSTANT:
            return self.value
        tol = _RANGE_TOL * max(1.0, abs(t))
        if self.kind is ScalarKind.PIECEWISE:
            lo, hi = self.times[0], self.times[-1]
            if t < lo - tol or t > hi + tol:
                raise ValueError(f"t={t} outside sampled range [{lo}, {hi}]")
            return float(np.interp(t, self.times, self.values))
        assert self.step is not None
        pos = (t - self.t0) / self.step
        last = len(self.values) - 1
        if pos < -tol or pos > last + tol:
            raise ValueError(
                f"t={t} outside tabulated range [{self.t0}, {self.t0 + last * self.step}]"
            )
        pos = min(max(pos, 0.0), float(last))
        i = int(math.floor(pos))
        frac = pos - i
        if frac <= tol or i == last:
            return self.values[i]
        return (1.0 - frac) * self.values[i] + frac * self.values[i + 1]


def _fill_scalars(raw: Any, n_sites: int, fill: float) -> Any:
    if raw is None:
        return [fill] * n_sites
    return raw


# ── System ──────────────────────────────────────────────────────────
class SystemModel(BaseModel):
    """Open transverse-field Ising chain with time-dependent fields.

    ``jzz[r]`` couples sites ``r`` and ``r+1``; the last entry is the open
    boundary and must vanish (see ``validate_model``).  A list one entry
    short is padded with that zero.
    """

    model_config = ConfigDict(frozen=True)

    n_sites: int = Field(ge=1)
    hx: list[TimeScalar]
    hz: list[TimeScalar]
    jzz: list[TimeScalar]

    @model_validator(mode="before")
    @classmethod
    def _defaults(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            n = data.get("n_sites")
            if isinstance(n, int):
                data["hx"] = _fill_scalars(data.get("hx"), n, 0.0)
                data["hz"] = _fill_scalars(data.get("hz"), n, 0.0)
                jzz = _fill_scalars(data.get("jzz"), n, 0.0)
                if isinstance(jzz, list) and len(jzz) == n - 1:
                    jzz = [*jzz, 0.0]
                data["jzz"] = jzz
        return data

    @model_validator(mode="after")
    def _check_lengths(self) -> SystemModel:
        for name in ("hx", "hz", "jzz"):
            if len(getattr(self, name)) != self.n_sites:
                raise ValueError(f"{name} must have n_sites={self.n_sites} entries")
        return self

    def fields_at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(hx, hz, J)`` evaluated at time *t*."""
        return (
            np.array([s.at(t) for s in self.hx]),
            np.array([s.at(t) for s in self.hz]),
            np.array([s.at(t) for s in self.jzz]),
        )


# ── Baths ───────────────────────────────────────────────────────────
_EXPRESSION_NAMESPACE: dict[str, Any] = {
    "np": np,
    "pi": np.pi,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "arctan": np.arctan,
}


class SpectralComponent(BaseModel):
    """One zero-temperature spectral-density component A₀(ω) with hard cutoffs.

    ``ohmic`` is ``strength·ω·exp(−ω/omega_c)``; ``tabulated`` interpolates
    ``(omegas, values)`` with a monotone cubic, clamped at zero;
    ``expression`` is a numpy expression in ``w``.
    """

    model_config = ConfigDict(frozen=True)

    shape: SpectralShape
    w_ir: float = Field(default=0.0, ge=0.0)
    w_uv: float = Field(gt=0.0)
    strength: float = Field(default=0.0, ge=0.0)
    omega_c: float | None = Field(default=None, gt=0.0)
    omegas: list[float] = Field(default_factory=list)
    values: list[float] = Field(default_factory=list)
    expression: str | None = None
    slope0: float | None = None

    _interp: PchipInterpolator | None = PrivateAttr(default=None)
    _code: Any = PrivateAttr(default=None)
    _slope0: float = PrivateAttr(default=0.0)

    @model_validator(mode="after")
    def _check_shape(self) -> SpectralComponent:
        if self.w_ir > self.w_uv:
            raise ValueError("w_ir must not exceed w_uv")
        if self.shape is SpectralShape.OHMIC and self.omega_c is None:
            raise ValueError("ohmic component needs omega_c")
        if self.shape is SpectralShape.TABULATED:
            if len(self.omegas) < 2 or len(self.omegas) != len(self.values):
                raise ValueError("tabulated component needs >= 2 matching omegas/values")
            if any(b <= a for a, b in zip(self.omegas, self.omegas[1:])):
                raise ValueError("tabulated omegas must be strictly increasing")
            if any(v < 0 for v in self.values):
                raise ValueError("tabulated spectral values must be non-negative")
        if self.shape is SpectralShape.EXPRESSION and not self.expression:
            raise ValueError("expression component needs an expression")
        return self

    def model_post_init(self, __context: Any) -> None:
        if self.shape is SpectralShape.TABULATED:
            self._interp = PchipInterpolator(self.omegas, self.values, extrapolate=False)
        elif self.shape is SpectralShape.EXPRESSION:
            assert self.expression is not None
            self._code = compile(self.expression, "<spectral-density>", "eval")
        if self.slope0 is not None:
            self._slope0 = self.slope0
        elif self.shape is SpectralShape.OHMIC:
            self._slope0 = self.strength
        else:
            h = 1e-6 * max(self.w_uv, 1.0)
            base = self.zero_temperature(0.0)
            if not math.isfinite(base):
                base = 0.0
            self._slope0 = (self.zero_temperature(h) - base) / h

    @property
    def slope_at_zero(self) -> float:
        """lim_{ω→0⁺} A₀(ω)/ω."""
        return self._slope0

    def zero_temperature(self, w: float) -> float:
        """A₀(ω) for ω ≥ 0, ignoring cutoffs."""
        if self.shape is SpectralShape.OHMIC:
            assert self.omega_c is not None
            return self.strength * w * math.exp(-w / self.omega_c)
        if self.shape is SpectralShape.TABULATED:
            assert self._interp is not None
            v = float(self._interp(w))
            return max(v, 0.0) if math.isfinite(v) else 0.0
        with np.errstate(all="ignore"):
            v = float(eval(self._code, {"__builtins__": {}}, {**_EXPRESSION_NAMESPACE, "w": w}))
        return max(v, 0.0) if math.isfinite(v) else v


class BathModel(BaseModel):
    """Independent y- and z-axis baths per site.

    An empty component list means no noise on that axis at that site.
    Coupling scales default to the constant 1.
    """

    model_config = ConfigDict(frozen=True)

    n_sites: int = Field(ge=1)
    beta: float = Field(gt=0.0)
    tau: float = Field(default=0.0, ge=0.0)
    y_coupling: list[TimeScalar]
    z_coupling: list[TimeScalar]
    y_components: list[list[SpectralComponent]]
    z_components: list[list[SpectralComponent]]

    @model_validator(mode="before")
    @classmethod
    def _defaults(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            n = data.get("n_sites")
            if isinstance(n, int):
                for axis in ("y", "z"):
                    data[f"{axis}_coupling"] = _fill_scalars(data.get(f"{axis}_coupling"), n, 1.0)
                    if data.get(f"{axis}_components") is None:
                        data[f"{axis}_components"] = [[] for _ in range(n)]
        return data

    @model_validator(mode="after")
    def _check_lengths(self) -> BathModel:
        for name in ("y_coupling", "z_coupling", "y_components", "z_components"):
            if len(getattr(self, name)) != self.n_sites:
                raise ValueError(f"{name} must have n_sites={self.n_sites} entries")
        return self

    def coupling(self, axis: Axis, r: int) -> TimeScalar:
        return self.y_coupling[r] if axis is Axis.Y else self.z_coupling[r]

    def components(self, axis: Axis, r: int) -> list[SpectralComponent]:
        return self.y_components[r] if axis is Axis.Y else self.z_components[r]

    def has_noise(self, axis: Axis, r: int) -> bool:
        return bool(self.components(axis, r))

    def has_y_noise(self, r: int) -> bool:
        return self.has_noise(Axis.Y, r)

    def delta_m(self, r: int) -> int:
        """Base-4 slices per time step at site *r*: 3 with y-noise, else 1."""
        return 3 if self.has_y_noise(r) else 1

    def uniform_delta_m(self) -> int:
        """The chain-wide Δm; mixed chains are rejected."""
        values = {self.delta_m(r) for r in range(self.n_sites)}
        if len(values) != 1:
            raise ValueError(
                "y-noise must be present on every site or on none "
                f"(got slices-per-step {sorted(values)})"
            )
        return values.pop()

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


# ── Run parameters ──────────────────────────────────────────────────
class CompressionParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: CompressionMethod = CompressionMethod.DIRECT
    chi_max: int | None = Field(default=None, ge=1)  # None = unlimited
    eps_trunc: float = Field(default=0.0, ge=0.0, lt=1.0)
    renormalize: bool = True


class InitialState(BaseModel):
    """Pure initial state of the chain.

    ``product`` takes one entry per site: a name (``up``, ``down``, ``+x``,
    ``-x``, ``+y``, ``-y``) or ``[[re, im], [re, im]]`` amplitudes of
    (up, down).  No entries means all spins up.
    """

    model_config = ConfigDict(frozen=True)

    kind: InitialStateKind = InitialStateKind.PRODUCT
    states: list[str | list[list[float]]] = Field(default_factory=list)
    path: Path | None = None

    @field_validator("states")
    @classmethod
    def _check_states(cls, v: list[str | list[list[float]]]) -> list[str | list[list[float]]]:
        for entry in v:
            if isinstance(entry, str):
                if entry not in NAMED_SPINORS:
                    raise ValueError(f"unknown spinor name {entry!r}")
            elif len(entry) != 2 or any(len(pair) != 2 for pair in entry):
                raise ValueError("explicit spinors are [[re, im], [re, im]]")
        return v

    @model_validator(mode="after")
    def _check_path(self) -> InitialState:
        if self.kind is InitialStateKind.NPZ and self.path is None:
            raise ValueError("npz initial state needs a path")
        return self


_S = 1.0 / math.sqrt(2.0)
NAMED_SPINORS: dict[str, tuple[complex, complex]] = {
    "up": (1.0, 0.0),
    "down": (0.0, 1.0),
    "+x": (_S, _S),
    "-x": (_S, -_S),
    "+y": (_S, 1j * _S),
    "-y": (_S, -1j * _S),
}


class RunParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0.0)
    n_steps: int = Field(ge=1)
    compression: CompressionParams = Field(default_factory=CompressionParams)
    initial_state: InitialState = Field(default_factory=InitialState)
    seed: int = 0
    memory_window: bool = True


class RunConfig(BaseModel):
    """The whole run file: ``model``, ``bath``, ``run``, ``observables``."""

    model_config = ConfigDict(frozen=True)

    model: SystemModel
    bath: BathModel
    run: RunParams
    observables: list[str] = Field(default_factory=lambda: ["Z0"])

    @model_validator(mode="before")
    @classmethod
    def _share_chain_length(cls, data: Any) -> Any:
        if isinstance(data, dict):
            model = data.get("model")
            bath = data.get("bath")
            if isinstance(model, dict) and isinstance(bath, dict) and "n_sites" not in bath:
                data = {**data, "bath": {**bath, "n_sites": model.get("n_sites")}}
        return data

    @model_validator(mode="after")
    def _check_sites(self) -> RunConfig:
        if self.bath.n_sites != self.model.n_sites:
            raise ValueError("bath.n_sites must equal model.n_sites")
        return self

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()
