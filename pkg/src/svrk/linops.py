"""Weighted-inner-product linear algebra on dense, sparse and exact matrices.

The inner product is ``<u, v> = u^T M v`` with diagonal positive ``M``.
Float matrices are numpy arrays (or scipy.sparse for application only);
exact matrices are numpy object arrays of ``gmpy2.mpq``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from gmpy2 import mpq

from .energy import StabilityPolynomial
from .rational import exact_matmul, format_rational, mpq_matrix, parse_rational, psd_check_rational, to_mpq

__all__ = [
    "InnerProduct",
    "adjoint",
    "eye_like",
    "matmul",
    "polynomial_apply",
    "polynomial_matrix",
    "operator_norm_float",
    "norm_excess_float",
    "operator_norm_exact",
    "norm_excess_exact",
    "ExactExcess",
    "StabilityCertificate",
    "strong_stability_certificate",
    "ConvergenceError",
    "matrix_to_json",
    "matrix_from_json",
    "MAX_EXACT_DIM",
]

# Entry-growth guard for the exact path; the largest experiment is 70x70.
MAX_EXACT_DIM = 80


class ConvergenceError(RuntimeError):
    pass


def is_exact(A) -> bool:
    return isinstance(A, np.ndarray) and A.dtype == object


def matmul(A, B):
    """``A @ B``, routed through FLINT when both factors are exact matrices."""
    if is_exact(A) and is_exact(B) and A.ndim == 2 and B.ndim == 2:
        return exact_matmul(A, B)
    return A @ B


@dataclass(frozen=True)
class InnerProduct:
    """Diagonal mass weights; float or mpq entries."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if isinstance(w, np.ndarray) and w.dtype == object:
            w = mpq_matrix(w)
        else:
            w = np.asarray(w, dtype=float)
        if w.ndim != 1 or not all(x > 0 for x in w):
            raise ValueError("inner-product weights must be a vector of positive numbers")
        object.__setattr__(self, "weights", w)

    @classmethod
    def identity(cls, n: int, exact: bool = False) -> InnerProduct:
        if exact:
            return cls(np.array([mpq(1)] * n, dtype=object))
        return cls(np.ones(n))

    @classmethod
    def exact_from(cls, weights) -> InnerProduct:
        return cls(mpq_matrix(list(weights)))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    def as_float(self) -> InnerProduct:
        if not self.exact:
            return self
        return InnerProduct(np.array([float(x) for x in self.weights]))

    def as_exact(self) -> InnerProduct:
        if self.exact:
            return self
        return InnerProduct(mpq_matrix([Fraction(x) for x in self.weights]))

    def dot(self, u, v):
        return np.sum(u * self.weights * v)

    def norm(self, u) -> float:
        return math.sqrt(float(self.dot(u, u)))


def _check_square(A, ip: InnerProduct | None = None):
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if ip is not None and ip.dim != A.shape[0]:
        raise ValueError(f"matrix dimension {A.shape[0]} does not match inner product dimension {ip.dim}")


def adjoint(A, ip: InnerProduct | None = None):
    """``M^{-1} A^T M``: the adjoint of ``A`` under the weighted inner product."""
    _check_square(A, ip)
    if ip is None:
        return A.T.copy()
    w = ip.weights
    if sp.issparse(A):
        return (sp.diags(1.0 / w) @ A.T @ sp.diags(w)).tocsr()
    return (A.T * w[None, :]) / w[:, None]


def eye_like(A):
    n = A.shape[0]
    if sp.issparse(A):
        return sp.identity(n, format="csr")
    if is_exact(A):
        out = np.full((n, n), mpq(0), dtype=object)
        np.fill_diagonal(out, mpq(1))
        return out
    return np.eye(n)


def _coeffs_like(poly: StabilityPolynomial, Z):
    if is_exact(Z):
        return [to_mpq(a) for a in poly.coeffs]
    return [float(a) for a in poly.coeffs]


def polynomial_apply(poly: StabilityPolynomial, Z, u, *, skip_constant: bool = False):
    """Horner evaluation of ``R(Z) u`` using ``s`` matrix-vector products.

    With ``skip_constant`` the ``alpha_0`` term is dropped, returning
    ``(R(Z) - I) u`` without cancellation.
    """
    if Z.shape[1] != u.shape[0]:
        raise ValueError(f"dimension mismatch: {Z.shape} vs {u.shape}")
    a = _coeffs_like(poly, Z)
    v = a[-1] * u
    for k in range(len(a) - 2, 0, -1):
        v = Z @ v + a[k] * u
    v = Z @ v
    return v if skip_constant else v + a[0] * u


def polynomial_matrix(poly: StabilityPolynomial, Z, *, skip_constant: bool = False):
    """Materialize ``R(Z)`` (or ``R(Z) - I``) by Horner's rule."""
    _check_square(Z)
    a = _coeffs_like(poly, Z)
    I = eye_like(Z)
    V = a[-1] * I
    for k in range(len(a) - 2, 0, -1):
        V = matmul(Z, V) + a[k] * I
    V = matmul(Z, V)
    return V if skip_constant else V + a[0] * I


# ---------------------------------------------------------------- float path


def _rayleigh_excess(E, w, v) -> float:
    """``(||(I+E)v||^2 - ||v||^2) / ||v||^2`` evaluated without cancellation."""
    Ev = E @ v
    return (2.0 * np.dot(w * Ev, v) + np.dot(w * Ev, Ev)) / np.dot(w * v, v)


# Dense symmetric eigensolver up to this size, Lanczos beyond.
DENSE_EIGH_LIMIT = 2000


def _max_excess(E, w, tol: float, maxiter: int) -> float:
    """Largest ``(||(I+E)v||^2 - ||v||^2) / ||v||^2`` over ``v``.

    This is the top eigenvalue of ``M^{-1} R^T M R - I`` with ``R = I + E``,
    symmetrized by ``W^{1/2}`` as ``F + F^T + F^T F`` with
    ``F = W^{1/2} E W^{-1/2}``, so it is never formed as ``R^T R - I``.
    For small steps all eigenvalues of ``R^T M R`` cluster within ``O(tau)``
    of one and plain power iteration needs ``O(1/tau)`` sweeps; a symmetric
    eigensolver does not.  Lanczos starts from the all-ones vector.  The
    returned value is the Rayleigh quotient at the computed eigenvector.
    """
    n = E.shape[0]
    sw = np.sqrt(w)
    if n <= DENSE_EIGH_LIMIT:
        Ed = E.toarray() if sp.issparse(E) else E
        F = (sw[:, None] * Ed) / sw[None, :]
        S = F + F.T + F.T @ F
        _, vecs = scipy.linalg.eigh((S + S.T) / 2, subset_by_index=[n - 1, n - 1])
    else:
        Et = E.T

        def apply(y):
            x = y / sw
            Ex = E @ x
            return sw * (Ex + (Et @ (w * (x + Ex))) / w)

        op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
        try:
            _, vecs = spla.eigsh(op, k=1, which="LA", v0=sw.copy(), tol=tol, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos iteration did not converge in {maxiter} restarts") from exc
    return _rayleigh_excess(E, w, vecs[:, 0] / sw)


def _as_float_matrix(A):
    if sp.issparse(A):
        return A.tocsr().astype(float)
    if is_exact(A):
        return np.array([[float(x) for x in row] for row in A])
    return np.asarray(A, dtype=float)


def norm_excess_float(E, ip: InnerProduct | None = None, tol: float = 1e-13, maxiter: int = 10**6) -> float:
    """``||I + E|| - 1`` computed from the increment ``E = R - I``."""
    _check_square(E, ip)
    E = _as_float_matrix(E)
    w = np.ones(E.shape[0]) if ip is None else ip.as_float().weights
    delta = _max_excess(E, w, tol, maxiter)
    return delta / (math.sqrt(1.0 + delta) + 1.0)


def operator_norm_float(R, ip: InnerProduct | None = None, tol: float = 1e-13, maxiter: int = 10**6) -> float:
    """``||R|| = sqrt(lambda_max(M^{-1} R^T M R))`` in the weighted norm.

    Computed as the largest singular value of ``W^{1/2} R W^{-1/2}`` so small
    norms keep full relative accuracy.  Deterministic; use
    :func:`norm_excess_float` for ``||R|| - 1`` when ``R`` is close to ``I``.
    """
    _check_square(R, ip)
    R = _as_float_matrix(R)
    n = R.shape[0]
    w = np.ones(n) if ip is None else ip.as_float().weights
    sw = np.sqrt(w)
    if n <= DENSE_EIGH_LIMIT:
        Rd = R.toarray() if sp.issparse(R) else R
        return float(scipy.linalg.svdvals((sw[:, None] * Rd) / sw[None, :])[0])
    Rt = R.T

    def apply(y):
        x = y / sw
        return sw * ((Rt @ (w * (R @ x))) / w)

    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    try:
        vals = spla.eigsh(op, k=1, which="LA", v0=sw.copy(), tol=tol, maxiter=maxiter, return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos iteration did not converge in {maxiter} restarts") from exc
    return math.sqrt(max(float(vals[0]), 0.0))


# ---------------------------------------------------------------- exact path


def _exact_inputs(R, ip: InnerProduct | None):
    _check_square(R, ip)
    n = R.shape[0]
    if n > MAX_EXACT_DIM:
        raise ValueError(f"exact path limited to dimension {MAX_EXACT_DIM}, got {n}")
    R = R if is_exact(R) else mpq_matrix(R)
    ip = InnerProduct.identity(n, exact=True) if ip is None else ip.as_exact()
    return R, ip


def _gram(R, w):
    """``R^T M R`` exactly."""
    return matmul(R.T.copy(), w[:, None] * R)


def operator_norm_exact(R, ip: InnerProduct | None = None, tol=Fraction(1, 10**6)) -> tuple[mpq, mpq]:
    """Bracket ``[lo, hi]`` for ``lambda_max = ||R||^2`` with ``hi - lo <= tol * hi``.

    ``lam >= lambda_max`` exactly when ``lam M - R^T M R`` is positive
    semidefinite, which is decided by exact elimination.  The initial upper
    bound is the largest Gershgorin row sum of ``M^{-1} R^T M R``.
    """
    R, ip = _exact_inputs(R, ip)
    w = ip.weights
    tol = to_mpq(tol)
    G = _gram(R, w)
    T = G / w[:, None]
    hi = max(sum(abs(x) for x in row) for row in T)
    lo = mpq(0)
    M = np.diag(w)

    def upper(lam):
        return psd_check_rational(lam * M - G).psd

    if upper(lo):
        return lo, lo
    while hi - lo > tol * hi:
        mid = (lo + hi) / 2
        if upper(mid):
            hi = mid
        else:
            lo = mid
    if upper(lo):
        hi = lo
    return lo, hi


@dataclass(frozen=True)
class ExactExcess:
    """Exact bracket for ``delta = lambda_max - 1`` and the derived ``||R|| - 1``."""

    lo: mpq
    hi: mpq

    @property
    def exact_zero(self) -> bool:
        return self.lo == 0 and self.hi == 0

    @property
    def sign(self) -> int:
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        return 0

    @property
    def value(self) -> float:
        """``||R|| - 1 = delta / (sqrt(1 + delta) + 1)`` at the bracket midpoint."""
        mid = (self.lo + self.hi) / 2
        d = _mpq_to_float(mid)
        return d / (math.sqrt(1.0 + d) + 1.0)


def _mpq_to_float(q) -> float:
    return float(q)


def norm_excess_exact(R, ip: InnerProduct | None = None, rel_tol=Fraction(1, 1000), max_steps: int = 4000) -> ExactExcess:
    """Exact bracket for ``lambda_max(M^{-1} R^T M R) - 1`` to relative width ``rel_tol``.

    Works on ``G = M - R^T M R``: ``lambda_max <= 1 + d`` iff ``G + d M >= 0``.
    A PSD singular ``G`` pins ``lambda_max = 1`` exactly.
    """
    R, ip = _exact_inputs(R, ip)
    w = ip.weights
    M = np.diag(w)
    G = M - _gram(R, w)
    rel_tol = to_mpq(rel_tol)

    def at_most(d):
        return psd_check_rational(G + d * M).psd

    base = psd_check_rational(G)
    steps = 0
    if base.psd:
        if base.rank < base.dim:
            return ExactExcess(mpq(0), mpq(0))
        if at_most(mpq(-1)):
            return ExactExcess(mpq(-1), mpq(-1))
        # delta in [-1, 0): find t with delta <= -t and delta > -2t
        t = mpq(1, 2)
        while not at_most(-t):
            t /= 2
            steps += 1
            if steps > max_steps:
                raise ConvergenceError("exact excess search exceeded its step budget")
        lo, hi = -2 * t, -t
    else:
        t = mpq(1)
        if at_most(t):
            while at_most(t / 2):
                t /= 2
                steps += 1
                if steps > max_steps:
                    raise ConvergenceError("exact excess search exceeded its step budget")
            lo, hi = t / 2, t
        else:
            while not at_most(2 * t):
                t *= 2
                steps += 1
                if steps > max_steps:
                    raise ConvergenceError("exact excess search exceeded its step budget")
            lo, hi = t, 2 * t
    while hi - lo > rel_tol * max(abs(lo), abs(hi)):
        mid = (lo + hi) / 2
        if at_most(mid):
            hi = mid
        else:
            lo = mid
        steps += 1
        if steps > max_steps:
            raise ConvergenceError("exact excess search exceeded its step budget")
    return ExactExcess(lo, hi)


@dataclass(frozen=True)
class StabilityCertificate:
    stable: bool
    witness: np.ndarray | None = None

    @property
    def verdict(self) -> str:
        return "StronglyStable" if self.stable else "NotStronglyStable"

    def to_json(self) -> str:
        wit = None if self.witness is None else [format_rational(Fraction(int(x.numerator), int(x.denominator))) for x in self.witness]
        return json.dumps({"verdict": self.verdict, "witness": wit})


def strong_stability_certificate(R, ip: InnerProduct | None = None) -> StabilityCertificate:
    """Exact decision of ``||R v|| <= ||v||`` for all ``v``.

    Strongly stable iff ``M - R^T M R`` is positive semidefinite; otherwise
    the returned witness satisfies ``||R w||^2 > ||w||^2`` exactly.
    """
    R, ip = _exact_inputs(R, ip)
    w = ip.weights
    res = psd_check_rational(np.diag(w) - _gram(R, w))
    if res.psd:
        return StabilityCertificate(True)
    v = res.witness
    Rv = R @ v
    if not np.sum(w * Rv * Rv) > np.sum(w * v * v):
        raise AssertionError("internal error: witness does not grow")
    return StabilityCertificate(False, v)


# ---------------------------------------------------------------- JSON


def matrix_to_json(A) -> str:
    if is_exact(A):
        rows = [[format_rational(Fraction(int(x.numerator), int(x.denominator))) for x in row] for row in A]
    else:
        rows = np.asarray(A, dtype=float).tolist()
    return json.dumps({"rows": A.shape[0], "cols": A.shape[1], "entries": rows})


def matrix_from_json(text: str, exact: bool = True):
    doc = json.loads(text)
    entries = doc["entries"]
    if exact:
        A = mpq_matrix([[parse_rational(x) if isinstance(x, str) else parse_rational(str(x)) for x in row] for row in entries])
    else:
        A = np.array([[float(parse_rational(x)) if isinstance(x, str) else float(x) for x in row] for row in entries])
    if A.shape != (doc["rows"], doc["cols"]):
        raise ValueError("matrix JSON shape does not match its entries")
    return A
