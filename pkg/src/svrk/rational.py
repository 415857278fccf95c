"""Exact rational helpers: parsing, formatting, mpq matrices and a PSD test.

Exact matrices are ``gmpy2.mpq`` object arrays; ``fractions.Fraction`` is
accepted anywhere a rational is expected.  Matrix products and the PSD test
hand the heavy lifting to FLINT.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from numbers import Rational

import flint
import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

__all__ = [
    "parse_rational",
    "format_rational",
    "to_mpq",
    "mpq_matrix",
    "mpq_eye",
    "solve_exact",
    "exact_matmul",
    "PSDResult",
    "psd_check_rational",
    "psd_check_bareiss",
]


def parse_rational(text) -> Fraction:
    """Parse ``"3"``, ``"-1/4800"``, ``"1.01/24"`` or ``"1e-3"`` exactly.

    Decimal literals are read as the decimal they spell, never through a float.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, (int, Rational)) and not isinstance(text, bool):
        return Fraction(text)
    if type(text).__name__ == "mpq":
        return Fraction(int(text.numerator), int(text.denominator))
    if isinstance(text, float):
        raise TypeError("floats are not exact; pass the value as a string")
    s = str(text).strip().replace("−", "-")
    if not s:
        raise ValueError("empty rational literal")
    if "/" in s:
        num, _, den = s.partition("/")
        if "/" in den:
            raise ValueError(f"malformed rational literal {text!r}")
        d = Fraction(den.strip())
        if d == 0:
            raise ZeroDivisionError(f"zero denominator in {text!r}")
        return Fraction(num.strip()) / d
    return Fraction(s)


def format_rational(q) -> str:
    """Render as ``"num/den"`` (denominator always printed)."""
    q = parse_rational(q)
    return f"{q.numerator}/{q.denominator}"


def to_mpq(x) -> mpq:
    if type(x).__name__ == "mpq":
        return x
    if isinstance(x, (str, Fraction)):
        f = parse_rational(x)
        return mpq(f.numerator, f.denominator)
    if isinstance(x, (int, np.integer)):
        return mpq(int(x))
    if type(x).__name__ == "mpz":
        return mpq(x)
    if isinstance(x, Rational):
        return mpq(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def mpq_matrix(rows) -> np.ndarray:
    """Object array of mpq from nested sequences, strings or Fractions."""
    arr = np.asarray(rows, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_mpq(v)
    return out


def mpq_eye(n: int) -> np.ndarray:
    out = np.full((n, n), mpq(0), dtype=object)
    for i in range(n):
        out[i, i] = mpq(1)
    return out


def solve_exact(A, b) -> np.ndarray:
    """Gauss-Jordan solve of a nonsingular rational system."""
    A = mpq_matrix(A)
    x = mpq_matrix(b)
    n = A.shape[0]
    M = A.copy()
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r, col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        inv = 1 / M[col, col]
        M[col] = M[col] * inv
        x[col] = x[col] * inv
        for r in range(n):
            if r != col and M[r, col] != 0:
                f = M[r, col]
                M[r] = M[r] - f * M[col]
                x[r] = x[r] - f * x[col]
    return x


@dataclass(frozen=True)
class PSDResult:
    """Outcome of :func:`psd_check_rational`.

    For a PSD matrix ``rank`` is the exact rank; otherwise it is informative
    only.  ``witness`` (set only when not PSD) satisfies
    ``witness^T S witness = witness_value < 0``.
    """

    psd: bool
    rank: int
    dim: int
    witness: np.ndarray | None = None
    witness_value: mpq | None = None

    @property
    def definite(self) -> bool:
        return self.psd and self.rank == self.dim

    def __bool__(self) -> bool:
        return self.psd


def _lcm(a, b):
    return a * b // gmpy2.gcd(a, b)


def _to_fmpq_mat(A) -> flint.fmpq_mat:
    rows, cols = A.shape
    return flint.fmpq_mat(rows, cols, [flint.fmpq(int(q.numerator), int(q.denominator)) for q in A.flat])


def _from_fmpq_mat(F) -> np.ndarray:
    out = np.empty((F.nrows(), F.ncols()), dtype=object)
    for i in range(F.nrows()):
        for j in range(F.ncols()):
            q = F[i, j]
            out[i, j] = mpq(int(q.p), int(q.q))
    return out


def exact_matmul(A, B) -> np.ndarray:
    """Product of two exact 2-D matrices (object arrays of rationals)."""
    A = mpq_matrix(A)
    B = mpq_matrix(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot multiply shapes {A.shape} and {B.shape}")
    if 0 in A.shape or 0 in B.shape:
        return np.full((A.shape[0], B.shape[1]), mpq(0), dtype=object)
    return _from_fmpq_mat(_to_fmpq_mat(A) * _to_fmpq_mat(B))


def _checked_square_symmetric(S) -> np.ndarray:
    Q = mpq_matrix(S)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("psd_check_rational needs a square matrix")
    n = Q.shape[0]
    if not all(Q[i, j] == Q[j, i] for i in range(n) for j in range(i + 1, n)):
        raise ValueError("matrix is not symmetric")
    return Q


def _integer_scaled(Q) -> np.ndarray:
    """``lcm(denominators) * Q`` as an ``mpz`` object array (same PSD status)."""
    den = reduce(_lcm, (q.denominator for q in Q.flat), mpz(1))
    A = np.empty(Q.shape, dtype=object)
    for idx, q in np.ndenumerate(Q):
        A[idx] = q.numerator * (den // q.denominator)
    return A


def psd_check_rational(S) -> PSDResult:
    """Decide ``S >= 0`` exactly from the characteristic polynomial.

    A real symmetric matrix has only real eigenvalues, so Descartes' rule of
    signs is exact for its characteristic polynomial: ``S`` is PSD iff the
    coefficients of ``det(x I - S)`` alternate in sign (zeros allowed), and the
    multiplicity of the root ``0`` is the nullity.  When ``S`` is not PSD a
    witness is built by inverse iteration at high precision towards the most
    negative eigenvalue, rounded to integers and checked exactly; the
    elimination in :func:`psd_check_bareiss` is the fallback.
    """
    Q = _checked_square_symmetric(S)
    n = Q.shape[0]
    if n == 0:
        return PSDResult(True, 0, 0)
    A = flint.fmpz_mat([[int(x) for x in row] for row in _integer_scaled(Q)])
    coeffs = A.charpoly().coeffs()
    nullity = next(j for j, c in enumerate(coeffs) if c != 0)
    psd = all(c == 0 or (c > 0) == ((n - j) % 2 == 0) for j, c in enumerate(coeffs))
    if psd:
        return PSDResult(True, n - nullity, n)
    v = _spectral_witness(A, coeffs[nullity:], n)
    if v is None:
        return psd_check_bareiss(Q)
    w = np.array([mpq(int(v[i, 0])) for i in range(n)], dtype=object)
    value = w @ (Q @ w)
    if not value < 0:
        return psd_check_bareiss(Q)
    return PSDResult(False, n - nullity, n, witness=w, witness_value=value)


def _spectral_witness(A, coeffs, n):
    """Integer ``v`` with ``v^T A v < 0``, or ``None`` if the search fails."""
    roots = flint.fmpz_poly(coeffs).complex_roots()
    lam = min(r.real.mid() for r, _ in roots)
    if not lam < 0:
        return None
    bits = max(int(abs(A[i, j])).bit_length() for i in range(n) for j in range(n))
    old = flint.ctx.prec
    flint.ctx.prec = 2 * bits + 256
    try:
        shifted = flint.arb_mat(A) - flint.arb_mat(n, n, [lam if i == j else 0 for i in range(n) for j in range(n)])
        for seed in (1, 2, 3):
            x = flint.arb_mat(n, 1, [1 + (seed * 7919 * (i + 1)) % 17 for i in range(n)])
            try:
                for _ in range(3):
                    # only midpoints matter: the candidate is verified exactly
                    x = shifted.solve(x, nonstop=True)
                    mids = [x[i, 0].mid() for i in range(n)]
                    scale = max(abs(m) for m in mids)
                    if not scale > 0:
                        break
                    x = flint.arb_mat(n, 1, [(m / scale).mid() for m in mids])
            except (ZeroDivisionError, ValueError):
                continue
            if not all(x[i, 0].mid().is_finite() for i in range(n)):
                continue
            k = 16
            while k <= flint.ctx.prec:
                v = flint.fmpz_mat(n, 1, [(x[i, 0].mid() * 2**k).floor().unique_fmpz() for i in range(n)])
                if (v.transpose() * A * v)[0, 0] < 0:
                    return v
                k *= 2
    finally:
        flint.ctx.prec = old
    return None


def psd_check_bareiss(S) -> PSDResult:
    """Decide ``S >= 0`` exactly by elimination.

    Symmetric fraction-free (Bareiss) elimination with diagonal pivoting on
    the integer matrix ``lcm(denominators) * S``.  After eliminating a pivot
    set P, the remaining block equals det(S_PP) times the Schur complement, so
    signs can be read off directly.  A zero pivot whose row does not vanish,
    or a negative pivot, produces a witness ``v`` with ``v^T S v < 0``.
    """
    Q = _checked_square_symmetric(S)
    n = Q.shape[0]
    if n == 0:
        return PSDResult(True, 0, 0)
    A = _integer_scaled(Q)

    remaining = list(range(n))
    pivots: list[int] = []
    prev = mpz(1)
    while remaining:
        pos = [i for i in remaining if A[i, i] > 0]
        if not pos:
            neg = [i for i in remaining if A[i, i] < 0]
            if neg:
                w = {neg[0]: mpq(1)}
                return _witness(Q, pivots, remaining, w, n)
            for a in remaining:
                for b in remaining:
                    if a < b and A[a, b] != 0:
                        sign = 1 if A[a, b] > 0 else -1
                        w = {a: mpq(1), b: mpq(-sign)}
                        return _witness(Q, pivots, remaining, w, n)
            return PSDResult(True, len(pivots), n)
        p = pos[0]
        remaining.remove(p)
        pivots.append(p)
        if remaining:
            r = np.array(remaining)
            col = A[r, p]
            block = A[np.ix_(r, r)]
            A[np.ix_(r, r)] = (A[p, p] * block - np.outer(col, col)) // prev
        prev = A[p, p]
    return PSDResult(True, n, n)


def _witness(Q, pivots, remaining, w, n) -> PSDResult:
    v = np.full(n, mpq(0), dtype=object)
    for i, val in w.items():
        v[i] = val
    if pivots:
        P = np.array(pivots)
        R = np.array(remaining)
        rhs = -(Q[np.ix_(P, R)] @ v[R])
        v[P] = solve_exact(Q[np.ix_(P, P)], rhs)
    value = v @ (Q @ v)
    if not value < 0:
        raise AssertionError("internal error: PSD witness is not negative")
    return PSDResult(False, len(pivots), n, witness=v, witness_value=value)
