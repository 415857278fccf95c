"""Superviscosity-stabilized one-step operators for linear problems.

Both variants add the term ``mu (Z^T)^{k-1} Z^k + nu (Z^T)^k Z^k`` with
``k = k_star`` and ``Z^T`` the adjoint in the working inner product:

* modified: the RK polynomial is evaluated at ``Z + term``;
* filtered: the plain RK step is followed by ``I + term``.

Everything here is generic over float ndarrays, scipy.sparse matrices and
exact mpq object arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .energy import StabilityPolynomial
from .linops import InnerProduct, adjoint, eye_like, is_exact, matmul, polynomial_apply, polynomial_matrix
from .rational import parse_rational, to_mpq

__all__ = [
    "Mode",
    "SuperviscosityConfig",
    "superviscosity_term",
    "build_modified_generator",
    "build_filter",
    "one_step_operator",
    "one_step_increment",
    "LinearStepper",
]


class Mode(str, enum.Enum):
    PLAIN = "plain"
    MODIFIED = "modified"
    FILTERED = "filtered"

    @classmethod
    def parse(cls, text) -> Mode:
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower()
        aliases = {"p": "plain", "m": "modified", "f": "filtered"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class SuperviscosityConfig:
    """Dispersive ``mu``, diffusive ``nu`` and the leading index ``k_star``.

    ``mu`` and ``nu`` are kept as exact Fractions when given as strings or
    rationals, so the same config drives both the float and exact paths.
    """

    mu: Fraction | float = Fraction(0)
    nu: Fraction | float = Fraction(0)
    k_star: int = 1

    def __post_init__(self):
        if not isinstance(self.mu, float):
            object.__setattr__(self, "mu", parse_rational(self.mu))
        if not isinstance(self.nu, float):
            object.__setattr__(self, "nu", parse_rational(self.nu))
        if self.k_star < 1:
            raise ValueError("k_star must be at least 1")
        if self.k_star == 1 and self.mu != 0:
            raise ValueError("the dispersive term needs k_star >= 2 (mu must be 0 when k_star = 1)")

    @property
    def inactive(self) -> bool:
        return self.mu == 0 and self.nu == 0


def _scalar_like(x, Z):
    if is_exact(Z):
        return to_mpq(x)
    return float(x)


def superviscosity_term(Z, cfg: SuperviscosityConfig, ip: InnerProduct | None = None):
    """``(Z^T)^{k-1} (mu I + nu Z^T) Z^k`` as a matrix."""
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Z.shape}")
    if ip is not None and ip.dim != Z.shape[0]:
        raise ValueError("matrix and inner product dimensions differ")
    if ip is not None and is_exact(Z) and not ip.exact:
        ip = ip.as_exact()
    mu = _scalar_like(cfg.mu, Z)
    nu = _scalar_like(cfg.nu, Z)
    Zt = adjoint(Z, ip)
    Zk = Z
    for _ in range(cfg.k_star - 1):
        Zk = matmul(Z, Zk)
    W = mu * Zk + nu * matmul(Zt, Zk)
    for _ in range(cfg.k_star - 1):
        W = matmul(Zt, W)
    return W


def build_modified_generator(Z, cfg: SuperviscosityConfig, ip: InnerProduct | None = None):
    """``Z~ = Z + mu (Z^T)^{k-1} Z^k + nu (Z^T)^k Z^k`` (already scaled by tau)."""
    if cfg.inactive:
        return Z.copy()
    return Z + superviscosity_term(Z, cfg, ip)


def build_filter(Z, cfg: SuperviscosityConfig, ip: InnerProduct | None = None):
    """``I + mu (Z^T)^{k-1} Z^k + nu (Z^T)^k Z^k``."""
    if cfg.inactive:
        return eye_like(Z)
    return eye_like(Z) + superviscosity_term(Z, cfg, ip)


def one_step_operator(poly: StabilityPolynomial, Z, cfg: SuperviscosityConfig, mode, ip: InnerProduct | None = None):
    """Materialized one-step map: ``R(Z)``, ``R(Z~)`` or ``F R(Z)``."""
    mode = Mode.parse(mode)
    if mode is Mode.PLAIN:
        return polynomial_matrix(poly, Z)
    if mode is Mode.MODIFIED:
        return polynomial_matrix(poly, build_modified_generator(Z, cfg, ip))
    return matmul(build_filter(Z, cfg, ip), polynomial_matrix(poly, Z))


def one_step_increment(poly: StabilityPolynomial, Z, cfg: SuperviscosityConfig, mode, ip: InnerProduct | None = None):
    """One-step map minus the identity, formed without cancellation."""
    mode = Mode.parse(mode)
    if mode is Mode.PLAIN:
        return polynomial_matrix(poly, Z, skip_constant=True)
    if mode is Mode.MODIFIED:
        return polynomial_matrix(poly, build_modified_generator(Z, cfg, ip), skip_constant=True)
    R = polynomial_matrix(poly, Z)
    E = polynomial_matrix(poly, Z, skip_constant=True)
    if cfg.inactive:
        return E
    return matmul(superviscosity_term(Z, cfg, ip), R) + E


class LinearStepper:
    """Apply one stabilized step ``u -> R u`` without materializing ``R``.

    Meant for long runs on large sparse generators; the modified generator
    or the filter is assembled once.
    """

    def __init__(self, poly: StabilityPolynomial, Z, cfg: SuperviscosityConfig, mode, ip: InnerProduct | None = None):
        self.poly = poly
        self.mode = Mode.parse(mode)
        if self.mode is Mode.MODIFIED:
            self.generator = build_modified_generator(Z, cfg, ip)
        else:
            self.generator = Z
        self.term = None
        if self.mode is Mode.FILTERED and not cfg.inactive:
            self.term = superviscosity_term(Z, cfg, ip)

    def __call__(self, u):
        v = polynomial_apply(self.poly, self.generator, u)
        if self.term is not None:
            v = v + self.term @ v
        return v
