"""One-dimensional adaptive quadrature on top of QUADPACK.

``integrate_adaptive`` wraps the globally adaptive Gauss–Kronrod rule
(QAGS) and ``integrate_weighted_osc`` the Clenshaw–Curtis rule with
cos/sin weights (QAWO) from ``scipy.integrate.quad``.  Both report the
subinterval count and raise :class:`~quapichain.errors.QuadratureError`
only when the subdivision budget runs out.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

from scipy import integrate

from quapichain.errors import QuadratureError

logger = logging.getLogger(__name__)

DEFAULT_TOL_ABS = 1e-12
DEFAULT_TOL_REL = 1e-10
DEFAULT_LIMIT = 2000

_LIMIT_MESSAGE = "maximum number"


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    subintervals: int


def oscillation_limit(w: float, a: float, b: float) -> int:
    """Subinterval budget proportional to the completed oscillations on [a, b]."""
    return DEFAULT_LIMIT * (1 + int(math.floor(w * (b - a) / (2.0 * math.pi))))


def _run_quad(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    tol_abs: float,
    tol_rel: float,
    limit: int,
    **kwargs: object,
) -> QuadResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, a, b, epsabs=tol_abs, epsrel=tol_rel, limit=limit, full_output=1, **kwargs
        )
    value, abserr, info = out[0], out[1], out[2]
    used = int(info.get("last", 0)) if isinstance(info, dict) else 0
    result = QuadResult(value=float(value), error_estimate=abs(float(abserr)), subintervals=used)
    if len(out) > 3:
        message = str(out[3])
        # quad reports ier only through its message text.
        if _LIMIT_MESSAGE in message or used >= limit:
            raise QuadratureError(
                f"quadrature on [{a}, {b}] hit the {limit}-subinterval limit: {message}",
                value=result.value,
                error_estimate=result.error_estimate,
                subintervals=used,
            )
        logger.warning("Quadrature on [%g, %g] flagged: %s", a, b, message)
    return result


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol_abs: float = DEFAULT_TOL_ABS,
    tol_rel: float = DEFAULT_TOL_REL,
    limit: int = DEFAULT_LIMIT,
) -> QuadResult:
    """∫_a^b f(ω) dω by adaptive Gauss–Kronrod subdivision."""
    if not (math.isfinite(a) and math.isfinite(b)) or a > b:
        raise ValueError(f"bounds must be finite with a <= b, got [{a}, {b}]")
    if a == b:
        return QuadResult(value=0.0, error_estimate=0.0, subintervals=0)
    return _run_quad(f, a, b, tol_abs=tol_abs, tol_rel=tol_rel, limit=limit)


def integrate_weighted_osc(
    f: Callable[[float], float],
    a: float,
    b: float,
    w: float,
    kind: Literal["cos", "sin"],
    tol_abs: float = DEFAULT_TOL_ABS,
    tol_rel: float = DEFAULT_TOL_REL,
) -> QuadResult:
    """∫_a^b f(ω)·kernel(wω) dω with kernel ``cos`` or ``sin``.

    Fewer than one full period falls back to the adaptive rule on the
    explicit product; ``w=0`` with ``sin`` is exactly zero.
    """
    if w < 0:
        raise ValueError(f"oscillation rate must be >= 0, got {w}")
    if kind not in ("cos", "sin"):
        raise ValueError(f"kernel must be 'cos' or 'sin', got {kind!r}")
    if not (math.isfinite(a) and math.isfinite(b)) or a > b:
        raise ValueError(f"bounds must be finite with a <= b, got [{a}, {b}]")
    if a == b or (w == 0.0 and kind == "sin"):
        return QuadResult(value=0.0, error_estimate=0.0, subintervals=0)
    if w * (b - a) < 2.0 * math.pi:
        kernel = math.cos if kind == "cos" else math.sin
        return integrate_adaptive(
            lambda x: f(x) * kernel(w * x), a, b, tol_abs=tol_abs, tol_rel=tol_rel
        )
    return _run_quad(
        f,
        a,
        b,
        tol_abs=tol_abs,
        tol_rel=tol_rel,
        limit=oscillation_limit(w, a, b),
        weight=kind,
        wvar=w,
    )
