"""Solution-dependent diffusive filter for nonlinear problems.

After an RK step ``u0 -> u+`` the filter ``u_F = (I + nu D^T D) u+`` uses

    nu = min((||u0||^2 - ||u+||^2) / ||D u+||^2, 0)

so that the filtered norm never exceeds ``||u0||`` as long as
``|nu| ||D||^2 <= 1``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .dg import DGSpace, advection_blocks, block_circulant_norm, build_advection_operator
from .linops import InnerProduct, adjoint, operator_norm_float

__all__ = [
    "FilterInactive",
    "AdaptiveFilterReport",
    "adaptive_nu",
    "apply_adaptive_filter",
    "build_default_D",
    "default_D_norm",
    "FilterLog",
]

log = logging.getLogger(__name__)


class FilterInactive(Exception):
    """``||D u+|| = 0`` while the norm grew: this ``D`` cannot act on ``u+``."""


@dataclass(frozen=True)
class AdaptiveFilterReport:
    nu: float
    guarantee_held: bool
    norm_before: float  # ||u+||
    norm_after: float  # ||u_F||
    norm_initial: float  # ||u0||
    inactive: bool = False


def _sq(ip: InnerProduct, v) -> float:
    return float(np.dot(ip.weights * v, v))


def _deficit(u0, u_plus, ip: InnerProduct, increment=None) -> float:
    """``||u0||^2 - ||u+||^2``; from ``increment = u+ - u0`` when available.

    ``-(2 <u0, d> + ||d||^2)`` avoids subtracting two nearly equal squared
    norms, whose rounding error would otherwise swamp ``||D u+||^2`` on fine
    meshes.
    """
    if increment is None:
        return _sq(ip, u0) - _sq(ip, u_plus)
    return -(2.0 * float(np.dot(ip.weights * u0, increment)) + _sq(ip, increment))


def adaptive_nu(u0, u_plus, D, ip: InnerProduct, increment=None) -> float:
    """The norm-matching diffusion coefficient; ``0`` when the norm did not grow."""
    deficit = _deficit(u0, u_plus, ip, increment)
    if deficit >= 0:
        return 0.0
    Du = D @ u_plus
    den = _sq(ip, Du)
    if den == 0:
        raise FilterInactive("||D u+|| = 0 but the norm grew")
    return min(deficit / den, 0.0)


def apply_adaptive_filter(u0, u_plus, D, ip: InnerProduct, D_norm: float | None = None, increment=None):
    """Return ``(u_F, report)``.

    ``D_norm`` is the weighted operator norm of ``D``; it is computed with
    :func:`operator_norm_float` when not supplied.  ``increment`` is the RK
    update ``u+ - u0`` as accumulated by the stepper, used for an accurate
    norm deficit.  With ``nu = 0`` the input ``u_plus`` is returned as is.
    """
    n0 = math.sqrt(_sq(ip, u0))
    n_plus = math.sqrt(_sq(ip, u_plus))
    try:
        nu = adaptive_nu(u0, u_plus, D, ip, increment)
    except FilterInactive:
        log.warning("adaptive filter inactive: ||D u+|| = 0 while the norm grew; passing u+ through")
        return u_plus, AdaptiveFilterReport(0.0, True, n_plus, n_plus, n0, inactive=True)
    if nu == 0.0:
        return u_plus, AdaptiveFilterReport(0.0, True, n_plus, n_plus, n0)
    if D_norm is None:
        D_norm = operator_norm_float(D.toarray() if sp.issparse(D) else D, ip)
    Du = D @ u_plus
    uF = u_plus + nu * (adjoint(D, ip) @ Du)
    held = abs(nu) * D_norm**2 <= 1.0
    return uF, AdaptiveFilterReport(nu, held, n_plus, math.sqrt(_sq(ip, uF)), n0)


def build_default_D(space: DGSpace, tau: float, k_star: int):
    """``(tau L_upwind)^k_star`` as a sparse matrix; annihilates constants."""
    if k_star < 1:
        raise ValueError("k_star must be at least 1")
    Z = tau * build_advection_operator(space, -1.0, sparse=True)
    D = Z
    for _ in range(k_star - 1):
        D = Z @ D
    return D.tocsr()


def default_D_norm(space: DGSpace, tau: float, k_star: int) -> float:
    """Weighted norm of :func:`build_default_D` from its Fourier symbols."""
    pattern = 1.0 / (2.0 * np.arange(space.modes) + 1.0)
    return block_circulant_norm(advection_blocks(space.k, -1.0), pattern, space.N, k_star, tau / space.h)


@dataclass
class FilterLog:
    """Per-step reports, written as CSV."""

    rows: list[tuple[int, float, AdaptiveFilterReport]] = field(default_factory=list)

    def append(self, step: int, t: float, report: AdaptiveFilterReport) -> None:
        self.rows.append((step, t, report))

    @property
    def all_guaranteed(self) -> bool:
        return all(r.guarantee_held for _, _, r in self.rows)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["step", "t", "nu", "guarantee_held", "norm_before", "norm_after"])
            for step, t, r in self.rows:
                out.writerow([step, f"{t:.10e}", f"{r.nu:.10e}", str(r.guarantee_held).lower(), f"{r.norm_before:.16e}", f"{r.norm_after:.16e}"])

    def as_dicts(self):
        return [dict(step=s, t=t, **asdict(r)) for s, t, r in self.rows]
