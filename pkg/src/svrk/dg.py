"""Periodic 1D discontinuous Galerkin discretization on [0, 2 pi].

Each cell carries modal coefficients in the un-normalized Legendre basis
``P_0..P_k`` of the reference cell [-1, 1].  The mass matrix is diagonal with
entries ``h / (2m + 1)``, so ``h L`` and the mass pattern ``1 / (2m + 1)`` are
rational whenever the flux parameter is, which is what the exact stability
certificates need.

A DG function is a flat numpy vector of length ``N (k + 1)``, cell-major.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import numpy.polynomial.legendre as leg
import scipy.sparse as sp
from gmpy2 import mpq

from .linops import InnerProduct
from .rational import parse_rational, to_mpq

__all__ = [
    "DGSpace",
    "advection_blocks",
    "advection_blocks_exact",
    "build_advection_operator",
    "build_advection_operator_exact",
    "l2_project",
    "evaluate",
    "interface_values",
    "jumps",
    "entropy_flux",
    "burgers_rhs",
    "error_norms",
    "sample",
    "shift_cells",
    "block_circulant_norm",
    "write_coefficients_csv",
    "write_samples_csv",
    "indicator",
    "burgers_characteristic_solution",
]

DOMAIN_LENGTH = 2.0 * math.pi
MAX_DEGREE = 8


@dataclass(frozen=True)
class DGSpace:
    """``N`` uniform cells of degree-``k`` polynomials on the periodic [0, 2 pi]."""

    N: int
    k: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ValueError(f"need at least two cells, got N={self.N!r}")
        if not isinstance(self.k, (int, np.integer)) or not 0 <= self.k <= MAX_DEGREE:
            raise ValueError(f"polynomial degree must be in 0..{MAX_DEGREE}, got k={self.k!r}")

    @property
    def h(self) -> float:
        return DOMAIN_LENGTH / self.N

    @property
    def modes(self) -> int:
        return self.k + 1

    @property
    def dim(self) -> int:
        return self.N * (self.k + 1)

    @property
    def left_edges(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    @cached_property
    def mass_weights(self) -> np.ndarray:
        """Diagonal of the mass matrix: ``h / (2m + 1)`` for every cell."""
        pattern = self.h / (2.0 * np.arange(self.modes) + 1.0)
        return np.tile(pattern, self.N)

    def inner_product(self) -> InnerProduct:
        return InnerProduct(self.mass_weights)

    def exact_inner_product(self) -> InnerProduct:
        """Mass weights divided by ``h``; the same norm up to a constant factor."""
        pattern = [mpq(1, 2 * m + 1) for m in range(self.modes)]
        return InnerProduct(np.array(pattern * self.N, dtype=object))

    def physical(self, xi: np.ndarray) -> np.ndarray:
        """Physical points ``x[j, q]`` for reference points ``xi[q]`` in every cell."""
        return self.left_edges[:, None] + 0.5 * self.h * (np.asarray(xi)[None, :] + 1.0)

    def reshape(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        if u.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {u.shape}")
        return u.reshape(self.N, self.modes)


# ----------------------------------------------------------- linear advection


def _check_alpha(alpha):
    # alpha <= 0 gives a semi-negative operator; alpha in (0, 1] is accepted
    # because the adjoint of L_alpha is -L_{-alpha}.
    if alpha > 1 or alpha < -1:
        raise ValueError(f"flux parameter must lie in [-1, 1], got {alpha}")


def _blocks(k: int, alpha, zero, two):
    """Cell blocks of ``h L`` before the ``2n + 1`` row scaling.

    ``A0`` couples a cell to itself, ``Am`` to its left neighbour and ``Ap``
    to its right neighbour.  ``S[n, m] = int P_m P_n'`` equals 2 when
    ``n > m`` and ``n + m`` is odd.
    """
    a = (1 - alpha) / 2
    b = (1 + alpha) / 2
    n = k + 1
    A0 = [[zero] * n for _ in range(n)]
    Am = [[zero] * n for _ in range(n)]
    Ap = [[zero] * n for _ in range(n)]
    for r in range(n):
        for m in range(n):
            s = two if (r > m and (r + m) % 2 == 1) else zero
            sgn_rm = 1 if (r + m) % 2 == 0 else -1
            A0[r][m] = s - a + sgn_rm * b
            Ap[r][m] = -b * (1 if m % 2 == 0 else -1)
            Am[r][m] = a * (1 if r % 2 == 0 else -1)
    scale = [2 * r + 1 for r in range(n)]
    return tuple([[scale[r] * x for x in row] for r, row in enumerate(M)] for M in (A0, Am, Ap))


def advection_blocks(k: int, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Float blocks ``(A0, Am, Ap)`` of ``h L_alpha``."""
    _check_alpha(alpha)
    return tuple(np.array(M, dtype=float) for M in _blocks(k, float(alpha), 0.0, 2.0))


def advection_blocks_exact(k: int, alpha) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rational blocks ``(A0, Am, Ap)`` of ``h L_alpha``."""
    alpha = to_mpq(parse_rational(alpha))
    _check_alpha(alpha)
    blocks = _blocks(k, alpha, mpq(0), mpq(2))
    out = []
    for M in blocks:
        arr = np.empty((k + 1, k + 1), dtype=object)
        for i, row in enumerate(M):
            for j, x in enumerate(row):
                arr[i, j] = to_mpq(x)
        out.append(arr)
    return tuple(out)


def _assemble_sparse(space: DGSpace, A0, Am, Ap) -> sp.csr_matrix:
    N = space.N
    I = sp.identity(N, format="csr")
    left = sp.csr_matrix(np.roll(np.eye(N), -1, axis=1))  # row j picks cell j-1
    right = sp.csr_matrix(np.roll(np.eye(N), 1, axis=1))  # row j picks cell j+1
    return (sp.kron(I, A0) + sp.kron(left, Am) + sp.kron(right, Ap)).tocsr()


def build_advection_operator(space: DGSpace, alpha: float = -1.0, *, sparse: bool = False):
    """Matrix of ``L_alpha`` (already divided by ``h``) in the modal basis."""
    A0, Am, Ap = advection_blocks(space.k, alpha)
    L = _assemble_sparse(space, A0, Am, Ap) / space.h
    return L.tocsr() if sparse else L.toarray()


def build_advection_operator_exact(space: DGSpace, alpha=0) -> np.ndarray:
    """Rational ``h L_alpha``; multiply by the rational CFL ``tau / h`` to get ``Z``."""
    A0, Am, Ap = advection_blocks_exact(space.k, alpha)
    N, n = space.N, space.modes
    out = np.full((space.dim, space.dim), mpq(0), dtype=object)
    for j in range(N):
        rj = slice(j * n, (j + 1) * n)
        out[rj, rj] = A0
        jm = (j - 1) % N
        jp = (j + 1) % N
        out[rj, jm * n : (jm + 1) * n] = out[rj, jm * n : (jm + 1) * n] + Am
        out[rj, jp * n : (jp + 1) * n] = out[rj, jp * n : (jp + 1) * n] + Ap
    return out


def block_circulant_norm(blocks, weights: np.ndarray, N: int, power: int = 1, scale: float = 1.0) -> float:
    """Weighted 2-norm of ``(scale * C)^power`` for the block-circulant ``C``.

    ``C`` has diagonal block ``A0``, left coupling ``Am`` and right coupling
    ``Ap``; ``weights`` is the per-cell diagonal mass pattern.  The discrete
    Fourier transform block-diagonalizes ``C`` and the weighted norm, so the
    answer is the largest spectral norm over the ``N`` symbols.
    """
    A0, Am, Ap = (np.asarray(B, dtype=float) for B in blocks)
    sw = np.sqrt(np.asarray(weights, dtype=float))
    best = 0.0
    for l in range(N):
        z = np.exp(2j * math.pi * l / N)
        S = scale * (A0 + Am / z + Ap * z)
        P = np.linalg.matrix_power(S, power)
        Pw = (sw[:, None] * P) / sw[None, :]
        best = max(best, np.linalg.norm(Pw, 2))
    return float(best)


def shift_cells(u: np.ndarray, space: DGSpace, shift: int = 1) -> np.ndarray:
    """Cyclic translation by ``shift`` cells."""
    return np.roll(space.reshape(u), shift, axis=0).reshape(-1)


# ----------------------------------------------------------- point evaluation


def evaluate(u: np.ndarray, space: DGSpace, xi: np.ndarray) -> np.ndarray:
    """Values ``u[j, q]`` at reference points ``xi`` in every cell."""
    V = leg.legvander(np.asarray(xi, dtype=float), space.k)
    return space.reshape(u) @ V.T


def interface_values(u: np.ndarray, space: DGSpace) -> tuple[np.ndarray, np.ndarray]:
    """``(u_minus, u_plus)`` at the right interface ``x_{j+1/2}`` of each cell."""
    U = space.reshape(u)
    signs = (-1.0) ** np.arange(space.modes)
    minus = U.sum(axis=1)
    plus = np.roll(U @ signs, -1)
    return minus, plus


def jumps(u: np.ndarray, space: DGSpace) -> np.ndarray:
    """``u_plus - u_minus`` at every interface."""
    minus, plus = interface_values(u, space)
    return plus - minus


def l2_project(f: Callable, space: DGSpace) -> np.ndarray:
    """Cellwise L2 projection with ``k + 5`` Gauss-Legendre points."""
    xi, w = leg.leggauss(space.k + 5)
    X = space.physical(xi)
    F = np.asarray(f(X), dtype=float) * np.ones_like(X)
    V = leg.legvander(xi, space.k)
    coeffs = (F * w[None, :]) @ V
    coeffs *= (2.0 * np.arange(space.modes) + 1.0) / 2.0
    return coeffs.reshape(-1)


def error_norms(u: np.ndarray, exact: Callable, space: DGSpace) -> tuple[float, float, float]:
    """``(L1, L2, Linf)`` errors with ``k + 5`` Gauss points per cell.

    The maximum also includes both cell endpoints.
    """
    xi, w = leg.leggauss(space.k + 5)
    E = evaluate(u, space, xi) - exact(space.physical(xi))
    half_h = 0.5 * space.h
    l1 = half_h * float(np.sum(np.abs(E) @ w))
    l2 = math.sqrt(half_h * float(np.sum((E * E) @ w)))
    ends = np.array([-1.0, 1.0])
    Ee = evaluate(u, space, ends) - exact(space.physical(ends))
    linf = float(max(np.max(np.abs(E)), np.max(np.abs(Ee))))
    return l1, l2, linf


def sample(u: np.ndarray, space: DGSpace, m: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """``m`` uniformly spaced interior points per cell: ``(x, u(x))`` flattened."""
    if m < 1:
        raise ValueError("need at least one sample per cell")
    xi = -1.0 + (2.0 * np.arange(m) + 1.0) / m
    return space.physical(xi).reshape(-1), evaluate(u, space, xi).reshape(-1)


# ----------------------------------------------------------- Burgers


def entropy_flux(a, b):
    """Two-point flux ``(a^2 + a b + b^2) / 6`` for ``f(u) = u^2 / 2``."""
    return (a * a + a * b + b * b) / 6.0


def burgers_rhs(u: np.ndarray, space: DGSpace) -> np.ndarray:
    """Semi-discrete right-hand side of ``u_t + (u^2/2)_x = 0``.

    Volume term with ``2k + 1`` Gauss points, interface flux from
    :func:`entropy_flux`; the test function takes its interior trace on both
    cell edges.
    """
    k = space.k
    xi, w = leg.leggauss(2 * k + 1)
    V = leg.legvander(xi, k)
    dV = np.stack([leg.legval(xi, leg.legder(np.eye(k + 1)[m])) if m else np.zeros_like(xi) for m in range(k + 1)], axis=1)
    U = space.reshape(u)
    vals = U @ V.T
    vol = (0.5 * vals * vals * w[None, :]) @ dV
    minus, plus = interface_values(u, space)
    fr = entropy_flux(minus, plus)  # at x_{j+1/2}
    fl = np.roll(fr, 1)  # at x_{j-1/2}
    signs = (-1.0) ** np.arange(k + 1)
    R = vol - fr[:, None] + fl[:, None] * signs[None, :]
    R *= (2.0 * np.arange(k + 1) + 1.0) / space.h
    return R.reshape(-1)


def burgers_characteristic_solution(x, t: float, tol: float = 1e-14, maxiter: int = 100):
    """Pre-shock solution of Burgers with ``u(x, 0) = sin x``.

    Solves ``u = sin(x - u t)`` by Newton's method, which converges for
    ``t < 1`` from the starting guess ``sin x``.
    """
    x = np.asarray(x, dtype=float)
    if t >= 1.0:
        raise ValueError("characteristics cross at t = 1; no classical solution beyond")
    u = np.sin(x)
    for _ in range(maxiter):
        g = u - np.sin(x - u * t)
        dg = 1.0 + t * np.cos(x - u * t)
        step = g / dg
        u = u - step
        if np.max(np.abs(step)) <= tol:
            return u
    raise RuntimeError("characteristic Newton iteration did not converge")


def indicator(lo: float = 0.5 * math.pi, hi: float = 1.5 * math.pi) -> Callable:
    """Indicator function of ``[lo, hi]``."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return ((x >= lo) & (x <= hi)).astype(float)

    return f


# ----------------------------------------------------------- output


def write_coefficients_csv(path, u: np.ndarray, space: DGSpace) -> None:
    U = space.reshape(u)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["cell", "mode", "coefficient"])
        for j in range(space.N):
            for m in range(space.modes):
                out.writerow([j, m, f"{U[j, m]:.16e}"])


def write_samples_csv(path, columns: dict[str, np.ndarray], x: np.ndarray) -> None:
    """Write ``x`` and any number of sampled profiles side by side."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["x", *columns])
        for i, xv in enumerate(x):
            out.writerow([f"{xv:.10e}", *(f"{col[i]:.10e}" for col in columns.values())])
