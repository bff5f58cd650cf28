"""Exception types raised by the numerical core.

Argument problems raise plain ``ValueError``/``IndexError``; the types here
mark failures the CLI maps to its numeric exit status, plus misuse of the
stateful influence/evolution objects.
"""

from __future__ import annotations


class QuadratureError(ArithmeticError):
    """Adaptive integration exhausted its subinterval budget.

    The best estimate reached so far is kept on the exception so callers can
    decide whether it is still usable.
    """

    def __init__(
        self,
        message: str,
        *,
        value: float,
        error_estimate: float,
        subintervals: int,
    ) -> None:
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.subintervals = subintervals


class NumericalError(ArithmeticError):
    """A factorization failed or a tensor became non-finite."""


class StateError(RuntimeError):
    """A stateful object was driven out of order or is missing data."""
