"""Explicit Runge-Kutta steppers.

Linear problems are advanced through the stability polynomial; nonlinear
ones through a Butcher tableau.  Tableaux are stored with exact rationals so
their linear order conditions can be checked exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .energy import StabilityPolynomial
from .linops import polynomial_apply
from .rational import format_rational, parse_rational

__all__ = [
    "ButcherTableau",
    "HEUN",
    "FEHLBERG_6_5",
    "LinearStepConfig",
    "linear_step",
    "nonlinear_step",
    "nonlinear_increment",
    "StepFailure",
    "LinearOrderResult",
    "linear_order_check",
    "step_schedule",
    "march",
]


class StepFailure(ArithmeticError):
    """A stage or the update produced non-finite values."""


@dataclass(frozen=True)
class ButcherTableau:
    """Explicit tableau with rational ``A`` (strictly lower triangular), ``b``, ``c``."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    c: tuple[Fraction, ...] | None = None
    name: str = ""

    def __post_init__(self):
        A = tuple(tuple(parse_rational(x) for x in row) for row in self.A)
        b = tuple(parse_rational(x) for x in self.b)
        s = len(b)
        if len(A) != s or any(len(row) != s for row in A):
            raise ValueError(f"A must be {s}x{s} to match b")
        if any(A[i][j] != 0 for i in range(s) for j in range(i, s)):
            raise ValueError("A must be strictly lower triangular for an explicit method")
        if sum(b) != 1:
            raise ValueError(f"weights must sum to 1, got {sum(b)}")
        rows = tuple(sum(row) for row in A)
        c = rows if self.c is None else tuple(parse_rational(x) for x in self.c)
        if c != rows:
            raise ValueError("abscissae must equal the row sums of A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return len(self.b)

    def induced_coefficients(self) -> tuple[Fraction, ...]:
        """``alpha_0 = 1`` and ``alpha_k = b^T A^{k-1} 1`` for ``k = 1..s``."""
        s = self.stages
        vec = [Fraction(1)] * s
        alpha = [Fraction(1)]
        for _ in range(s):
            alpha.append(sum(bi * vi for bi, vi in zip(self.b, vec)))
            vec = [sum(self.A[i][j] * vec[j] for j in range(s)) for i in range(s)]
        return tuple(alpha)

    def stability_polynomial(self) -> StabilityPolynomial:
        alpha = list(self.induced_coefficients())
        while len(alpha) > 2 and alpha[-1] == 0:
            alpha.pop()
        return StabilityPolynomial(tuple(alpha))

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "A": [[format_rational(x) for x in row] for row in self.A],
                "b": [format_rational(x) for x in self.b],
                "c": [format_rational(x) for x in self.c],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> ButcherTableau:
        doc = json.loads(text)
        return cls(
            A=tuple(tuple(str(x) for x in row) for row in doc["A"]),
            b=tuple(str(x) for x in doc["b"]),
            c=None if doc.get("c") is None else tuple(str(x) for x in doc["c"]),
            name=doc.get("name", ""),
        )


def _lower(rows, s):
    out = []
    for i in range(s):
        r = list(rows[i]) if i < len(rows) else []
        out.append(tuple(r + ["0"] * (s - len(r))))
    return tuple(out)


HEUN = ButcherTableau(A=_lower([[], ["1"]], 2), b=("1/2", "1/2"), name="heun")

FEHLBERG_6_5 = ButcherTableau(
    A=_lower(
        [
            [],
            ["1/4"],
            ["3/32", "9/32"],
            ["1932/2197", "-7200/2197", "7296/2197"],
            ["439/216", "-8", "3680/513", "-845/4104"],
            ["-8/27", "2", "-3544/2565", "1859/4104", "-11/40"],
        ],
        6,
    ),
    b=("16/135", "0", "6656/12825", "28561/56430", "-9/50", "2/55"),
    name="fehlberg-6-5",
)


@dataclass(frozen=True)
class LinearOrderResult:
    ok: bool
    alpha: tuple[Fraction, ...]

    def __bool__(self) -> bool:
        return self.ok


def linear_order_check(tab: ButcherTableau, p: int) -> LinearOrderResult:
    """Exact check of ``b^T A^{k-1} 1 = 1/k!`` for ``k = 1..p``.

    Returns the verdict together with the induced coefficients
    ``alpha_0..alpha_s``.  Orders above the stage count always fail.
    """
    alpha = tab.induced_coefficients()
    if p > tab.stages:
        return LinearOrderResult(False, alpha)
    ok = all(alpha[k] == Fraction(1, math.factorial(k)) for k in range(1, p + 1))
    return LinearOrderResult(ok, alpha)


@dataclass(frozen=True)
class LinearStepConfig:
    poly: StabilityPolynomial
    tau: float
    generator: object

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError("time step must be nonnegative")


def linear_step(cfg: LinearStepConfig, u):
    """``R(tau L) u`` evaluated with matrix-vector products only."""
    L = cfg.generator
    if L.shape[1] != np.shape(u)[0]:
        raise ValueError(f"dimension mismatch: generator {L.shape} vs vector {np.shape(u)}")
    return polynomial_apply(cfg.poly, cfg.tau * L, u)


def nonlinear_step(tab: ButcherTableau, F: Callable, tau: float, u: np.ndarray) -> np.ndarray:
    """One explicit RK step for ``u' = F(u)``; ``F`` is called once per stage."""
    return u + nonlinear_increment(tab, F, tau, u)


def nonlinear_increment(tab: ButcherTableau, F: Callable, tau: float, u: np.ndarray) -> np.ndarray:
    """``u+ - u`` for one explicit RK step, accumulated without adding ``u``."""
    if not tau > 0:
        raise ValueError("time step must be positive")
    A = [[float(x) for x in row] for row in tab.A]
    b = [float(x) for x in tab.b]
    K = []
    for i in range(tab.stages):
        g = u
        for j in range(i):
            if A[i][j]:
                g = g + (tau * A[i][j]) * K[j]
        k = F(g)
        if not np.all(np.isfinite(k)):
            raise StepFailure(f"non-finite right-hand side at stage {i + 1}")
        K.append(k)
    out = np.zeros_like(u, dtype=float)
    for bi, k in zip(b, K):
        if bi:
            out = out + (tau * bi) * k
    if not np.all(np.isfinite(out)):
        raise StepFailure("non-finite update")
    return out


def step_schedule(tau: float, T: float) -> tuple[int, float]:
    """Number of steps and the final step size so that the march ends at ``T``.

    All steps have size ``tau`` except the last, which shrinks to land on
    ``T``; a remainder below ``1e-9 tau`` is absorbed instead of producing a
    tiny extra step.
    """
    if not tau > 0 or not T >= 0:
        raise ValueError("need tau > 0 and T >= 0")
    if T == 0:
        return 0, 0.0
    n = max(1, math.ceil(T / tau - 1e-9))
    last = T - (n - 1) * tau
    return n, last


def march(advance: Callable, u0: np.ndarray, tau: float, T: float, observer: Callable | None = None) -> np.ndarray:
    """Advance ``u0`` to ``T`` with ``advance(u, dt)``.

    ``observer(n, t, u)`` is called after every step (and at ``n = 0``).
    """
    n, last = step_schedule(tau, T)
    u = u0
    if observer is not None:
        observer(0, 0.0, u)
    for i in range(n):
        dt = tau if i < n - 1 else last
        u = advance(u, dt)
        if observer is not None:
            observer(i + 1, T if i == n - 1 else (i + 1) * tau, u)
    return u
