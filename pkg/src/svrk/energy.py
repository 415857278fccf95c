"""Exact one-step energy expansion for explicit RK stability polynomials.

For ``u+ = R(Z) u0`` with ``R(Z) = sum_k alpha_k Z^k`` the energy change is a
quadratic form in ``Z^i u0``.  Moving powers of ``Z`` across the inner product
with ``<Zv, w> = -<v, Zw> - [v, w]`` rewrites it as

    ||u+||^2 - ||u0||^2 = sum_k beta_k ||Z^k u0||^2
                          + sum_{i,j} gamma_ij [Z^i u0, Z^j u0]

where ``[v, w] = -<Zv, w> - <v, Zw>``.  The first nonzero ``beta`` (index
``k_star``) and the leading ``k_star x k_star`` block of ``gamma`` decide
strong stability for small steps and give the critical superviscosity
coefficients.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import format_rational, parse_rational, psd_check_rational

__all__ = [
    "StabilityPolynomial",
    "taylor_polynomial",
    "EnergyExpansion",
    "expand_energy",
    "leading_index",
    "CriticalBounds",
    "critical_bounds",
    "expansion_to_json",
    "TAYLOR_MAX_ORDER",
]

TAYLOR_MAX_ORDER = 12


@dataclass(frozen=True)
class StabilityPolynomial:
    """Coefficients ``alpha_0..alpha_s`` of an explicit RK method's linear map."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = tuple(parse_rational(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        if len(coeffs) < 2:
            raise ValueError("need at least alpha_0 and alpha_1")
        if coeffs[0] != 1 or coeffs[1] != 1:
            raise ValueError("consistency requires alpha_0 = alpha_1 = 1")
        if coeffs[-1] == 0:
            raise ValueError("leading coefficient alpha_s must be nonzero")

    @property
    def stages(self) -> int:
        return len(self.coeffs) - 1

    @property
    def order(self) -> int:
        p = 0
        for k, a in enumerate(self.coeffs):
            if a != Fraction(1, math.factorial(k)):
                break
            p = k
        return p

    def __call__(self, z):
        out = 0
        for a in reversed(self.coeffs):
            out = out * z + a
        return out


def taylor_polynomial(p: int) -> StabilityPolynomial:
    """The p-stage p-th order polynomial ``sum_{k<=p} Z^k / k!``."""
    if not isinstance(p, int) or not 1 <= p <= TAYLOR_MAX_ORDER:
        raise ValueError(f"order must be an integer in 1..{TAYLOR_MAX_ORDER}, got {p!r}")
    return StabilityPolynomial(tuple(Fraction(1, math.factorial(k)) for k in range(p + 1)))


@dataclass(frozen=True)
class EnergyExpansion:
    beta: dict[int, Fraction]
    gamma: tuple[tuple[Fraction, ...], ...]
    k_star: int
    leading_submatrix: tuple[tuple[Fraction, ...], ...]

    @property
    def stages(self) -> int:
        return len(self.gamma)


def _reduce_terms(alpha: Sequence[Fraction]):
    """Apply the two rewrite rules until only diagonal P and Q terms remain.

    P and Q terms are keyed by ``(i, j)`` with ``i >= j``.  The largest index
    gap is always rewritten first; each rule maps a term to fixed successors,
    so the result does not depend on that choice.
    """
    s = len(alpha) - 1
    P: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    Q: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for i in range(s + 1):
        for j in range(s + 1):
            if i or j:
                P[max(i, j), min(i, j)] += alpha[i] * alpha[j]
    while True:
        off = [key for key, c in P.items() if key[0] > key[1] and c]
        if not off:
            break
        i, j = max(off, key=lambda key: (key[0] - key[1], key))
        c = P.pop((i, j))
        if i - j >= 2:
            a, b = i - 1, j + 1
            P[max(a, b), min(a, b)] -= c
            Q[i - 1, j] -= c
        else:
            Q[j, j] -= c / 2
    return P, Q


def expand_energy(poly: StabilityPolynomial) -> EnergyExpansion:
    s = poly.stages
    P, Q = _reduce_terms(poly.coeffs)
    beta = {k: P.get((k, k), Fraction(0)) for k in range(1, s + 1)}
    gamma = [[Fraction(0)] * s for _ in range(s)]
    for (i, j), c in Q.items():
        if not (0 <= j <= i <= s - 1):
            raise AssertionError(f"semi-inner-product index out of range: {(i, j)}")
        if i == j:
            gamma[i][i] += c
        else:
            gamma[i][j] += c / 2
            gamma[j][i] += c / 2
    nonzero = [k for k in range(1, s + 1) if beta[k] != 0]
    # beta vanishing entirely would make the method energy-exact; never
    # happens for a valid explicit polynomial since beta_s = alpha_s^2.
    k_star = nonzero[0]
    lead = tuple(tuple(row[:k_star]) for row in gamma[:k_star])
    return EnergyExpansion(beta, tuple(tuple(r) for r in gamma), k_star, lead)


def leading_index(exp: EnergyExpansion, p: int | None = None, *, require_theorem: bool = False) -> int:
    """Return ``k_star``; with ``require_theorem`` insist on ``ceil((p+1)/2)``."""
    if require_theorem:
        if p is None:
            raise ValueError("the order p is needed to check the leading index")
        expected = -(-(p + 1) // 2)
        if exp.k_star != expected:
            raise AssertionError(f"k* = {exp.k_star}, expected ceil((p+1)/2) = {expected}")
    return exp.k_star


@dataclass(frozen=True)
class CriticalBounds:
    nu0: Fraction
    mu0: Fraction | None


def critical_bounds(exp: EnergyExpansion, p: int) -> CriticalBounds:
    """Critical diffusive (nu0) and, for even p, dispersive (mu0) coefficients.

    ``mu0`` is the exact Schur complement ``c - b^T A^{-1} b`` of the leading
    submatrix partitioned as ``[[A, b], [b^T, c]]``: the smallest ``mu`` with
    ``Gamma* - diag(0, ..., 0, mu) <= 0``.
    """
    k = exp.k_star
    nu0 = -exp.beta[k] / 2
    if p % 2:
        return CriticalBounds(nu0, None)
    G = exp.leading_submatrix
    A = [list(row[: k - 1]) for row in G[: k - 1]]
    b = [G[i][k - 1] for i in range(k - 1)]
    c = G[k - 1][k - 1]
    neg_A = [[-x for x in row] for row in A]
    check = psd_check_rational(neg_A)
    if not check.definite:
        raise ValueError("leading block of Gamma* is not negative definite")
    if k == 1:
        return CriticalBounds(nu0, c)
    x = _solve(A, b)
    return CriticalBounds(nu0, c - sum(bi * xi for bi, xi in zip(b, x)))


def _solve(A, b):
    n = len(A)
    M = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col] / M[col][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[i][n] / M[i][i] for i in range(n)]


def expansion_to_json(exp: EnergyExpansion, p: int, bounds: CriticalBounds | None = None) -> str:
    if bounds is None:
        bounds = critical_bounds(exp, p)
    doc = {
        "p": p,
        "beta": {str(k): format_rational(v) for k, v in exp.beta.items()},
        "gamma": [[format_rational(x) for x in row] for row in exp.gamma],
        "k_star": exp.k_star,
        "nu0": format_rational(bounds.nu0),
        "mu0": None if bounds.mu0 is None else format_rational(bounds.mu0),
    }
    return json.dumps(doc)
