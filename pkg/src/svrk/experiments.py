"""Experiment runners and their default parameter grids.

Every runner returns plain Python rows (lists of dicts) so the CLI, the
scripts and the tests share one code path; :func:`write_csv` renders them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .adaptive import FilterLog, apply_adaptive_filter, build_default_D, default_D_norm
from .dg import (
    DGSpace,
    build_advection_operator,
    build_advection_operator_exact,
    burgers_characteristic_solution,
    burgers_rhs,
    error_norms,
    indicator,
    l2_project,
    sample,
)
from .energy import critical_bounds, expand_energy, taylor_polynomial
from .linops import InnerProduct, adjoint, norm_excess_exact, norm_excess_float, strong_stability_certificate
from .rational import format_rational, mpq_matrix, parse_rational, to_mpq
from .rk import FEHLBERG_6_5, HEUN, march, nonlinear_increment
from .superviscosity import LinearStepper, Mode, SuperviscosityConfig, one_step_increment, one_step_operator

__all__ = [
    "ODE_MATRIX",
    "ode_exact_solution",
    "NormRow",
    "ODE_NORM_GRID",
    "DG_NORM_GRID",
    "NORM_STEPS",
    "ODE_ACCURACY_ROWS",
    "ODE_TAU_LADDER",
    "ADVECTION_ACCURACY_ROWS",
    "ADVECTION_N_LADDER",
    "BURGERS_LADDERS",
    "INITIAL_CONDITIONS",
    "critical_table",
    "norm_cell",
    "norm_table",
    "linear_run",
    "ode_accuracy",
    "advection_accuracy",
    "burgers_accuracy",
    "energy_evolution",
    "discontinuous",
    "burgers_run",
    "observed_orders",
    "write_csv",
    "fmt",
]

# ------------------------------------------------------------------ problems

ODE_MATRIX = -np.array([[1, 2, 2], [0, 1, 2], [0, 0, 1]], dtype=float)


def ode_exact_solution(t: float) -> np.ndarray:
    """Solution of ``u' = ODE_MATRIX u`` with ``u(0) = (1, 1, 1)``."""
    return np.array([1 - 4 * t + 2 * t * t, 1 - 2 * t, 1.0]) * math.exp(-t)


INITIAL_CONDITIONS: dict[str, Callable] = {
    "exp-sin": lambda x: np.exp(np.sin(x)),
    "sin": np.sin,
    "sin5": lambda x: np.sin(5 * x),
    "indicator": indicator(),
}


def _initial_condition(name: str) -> Callable:
    try:
        return INITIAL_CONDITIONS[name]
    except KeyError:
        raise ValueError(f"unknown initial condition {name!r}; choose from {sorted(INITIAL_CONDITIONS)}") from None


def _tableau(p: int):
    if p == 2:
        return HEUN
    if p == 5:
        return FEHLBERG_6_5
    raise ValueError("nonlinear runs support p = 2 (Heun) and p = 5 (Fehlberg) only")


# ------------------------------------------------------------------ formatting


def fmt(x: float) -> str:
    """Five significant digits in scientific notation."""
    return f"{x:.4E}"


def write_csv(rows: Sequence[dict], columns: Sequence[str] | None = None, out=None) -> str:
    """Render rows as CSV with a header; write to ``out`` (path or stream) if given."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r.get(c, "") for c in columns])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    return text


# ------------------------------------------------------------------ critical values


def critical_table(orders: Iterable[int] = range(1, 7)) -> list[dict]:
    rows = []
    for p in orders:
        exp = expand_energy(taylor_polynomial(p))
        b = critical_bounds(exp, p)
        rows.append(
            {
                "p": p,
                "k_star": exp.k_star,
                "mu0": "-" if b.mu0 is None else format_rational(b.mu0),
                "nu0": format_rational(b.nu0),
            }
        )
    return rows


# ------------------------------------------------------------------ norm tables


@dataclass(frozen=True)
class NormRow:
    """One row of a norm table: order, superviscosity pair and the modes run."""

    p: int
    mu: str
    nu: str
    modes: tuple[str, ...]


def _rows(p, pairs):
    out = []
    for mu, nu in pairs:
        modes = ("plain",) if mu == "0" and nu == "0" else ("modified", "filtered")
        out.append(NormRow(p, mu, nu, modes))
    return out


ODE_NORM_GRID: tuple[NormRow, ...] = tuple(
    _rows(1, [("0", "0"), ("0", "-1/2"), ("0", "-1.01/2")])
    + _rows(2, [("0", "0"), ("-1/4", "-1/8"), ("-0.99/4", "-1.01/8"), ("0", "-1.01/8")])
    + _rows(3, [("0", "0"), ("0", "1/24"), ("0", "1.01/24")])
    + _rows(4, [("0", "0"), ("1/144", "1/144"), ("1.01/144", "0.99/144"), ("1.01/144", "0"), ("0", "-100")])
)

DG_NORM_GRID: tuple[NormRow, ...] = tuple(
    _rows(1, [("0", "0"), ("0", "-1/2"), ("0", "-1.01/2")])
    + _rows(2, [("0", "0"), ("-1/4", "-1/8"), ("-0.99/4", "-1.01/8"), ("0", "-1.01/8")])
    + _rows(3, [("0", "0"), ("0", "1/24"), ("0", "0.99/24")])
    + _rows(4, [("0", "0"), ("1/144", "1/144"), ("1.01/144", "0.99/144"), ("1.01/144", "0")])
    + _rows(5, [("0", "0"), ("0", "-1/720"), ("0", "-1.01/720")])
    + _rows(6, [("0", "0"), ("-1/4800", "-1/5760"), ("-0.99/4800", "-1.01/5760"), ("0", "-1.01/5760")])
)

# tau (ODE) or tau/h (DG)
NORM_STEPS: tuple[Fraction, ...] = tuple(Fraction(1, 10**e) for e in range(1, 7))

CERTIFICATE_THRESHOLD = 1e-12


def _norm_system(system: str, p: int, n_cells: int, alpha):
    """Float generator, exact generator and inner products for a unit step.

    For ``dg`` the generator is ``h L`` so that ``Z = (tau / h) * generator``.
    """
    if system == "ode3":
        L = ODE_MATRIX
        return L, mpq_matrix(L.astype(int)), None, None, None
    if system == "dg":
        space = DGSpace(n_cells, p)
        hL = build_advection_operator(space, float(parse_rational(alpha))) * space.h
        hLq = build_advection_operator_exact(space, alpha)
        ipq = space.exact_inner_product()
        return hL, hLq, ipq.as_float(), ipq, space
    raise ValueError(f"unknown system {system!r}; use 'ode3' or 'dg'")


def norm_cell(system: str, p: int, mu, nu, mode, step, *, k: int | None = None, n_cells: int = 10, alpha="-1", exact: bool = False, certificate: bool | None = None) -> dict:
    """``||R|| - 1`` for one grid cell, with the exact verdict when needed.

    ``certificate=None`` computes the verdict only when the float value is
    below ``1e-12`` in magnitude (or ``exact`` is set).
    """
    poly = taylor_polynomial(p)
    k_star = expand_energy(poly).k_star
    cfg = SuperviscosityConfig(mu, nu, k_star)
    mode = Mode.parse(mode)
    step = parse_rational(step)
    deg = p if k is None else k
    G, Gq, ip, ipq, _ = _norm_system(system, deg, n_cells, alpha)
    value = norm_excess_float(one_step_increment(poly, float(step) * G, cfg, mode, ip), ip)
    row = {
        "system": system,
        "p": p,
        "k": deg if system == "dg" else "",
        "mu": format_rational(cfg.mu),
        "nu": format_rational(cfg.nu),
        "mode": mode.value,
        "step": format_rational(step),
        "value": fmt(value),
        "certificate": "",
        "exact_value": "",
    }
    if certificate is None:
        certificate = abs(value) < CERTIFICATE_THRESHOLD
    if certificate or exact:
        R = one_step_operator(poly, to_mpq(step) * Gq, cfg, mode, ipq)
        cert = strong_stability_certificate(R, ipq)
        row["certificate"] = "≤0" if cert.stable else ">0"
        if exact:
            row["exact_value"] = fmt(norm_excess_exact(R, ipq).value)
    return row


def norm_table(system: str = "ode3", grid: Sequence[NormRow] | None = None, steps: Sequence = NORM_STEPS, *, n_cells: int = 10, alpha="-1", exact: bool = False) -> list[dict]:
    if grid is None:
        grid = ODE_NORM_GRID if system == "ode3" else DG_NORM_GRID
    rows = []
    for r in grid:
        for mode in r.modes:
            for s in steps:
                rows.append(norm_cell(system, r.p, r.mu, r.nu, mode, s, n_cells=n_cells, alpha=alpha, exact=exact))
    return rows


NORM_COLUMNS = ["system", "p", "k", "mu", "nu", "mode", "step", "value", "certificate", "exact_value"]

# ------------------------------------------------------------------ linear runs


def linear_run(poly, L, cfg: SuperviscosityConfig, mode, ip: InnerProduct | None, u0, tau: float, T: float, observer=None):
    """March ``u' = L u`` with a stabilized RK step; the last step lands on ``T``."""
    steppers: dict[float, LinearStepper] = {}

    def advance(u, dt):
        if dt not in steppers:
            steppers[dt] = LinearStepper(poly, dt * L, cfg, mode, ip)
        out = steppers[dt](u)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("solution became non-finite")
        return out

    return march(advance, u0, tau, T, observer)


def observed_orders(errors: Sequence[float], sizes: Sequence[float]) -> list[float | None]:
    """``log(e_coarse / e_fine) / log(size_coarse / size_fine)``; ``None`` first."""
    out: list[float | None] = [None]
    for i in range(1, len(errors)):
        out.append(math.log(errors[i - 1] / errors[i]) / math.log(sizes[i - 1] / sizes[i]))
    return out


def _fmt_order(o):
    return "-" if o is None else f"{o:.2f}"


ODE_ACCURACY_ROWS = ((1, "0", "-1"), (2, "1", "-1"), (3, "0", "-1"), (3, "1", "0"), (4, "1", "-1"))
ODE_TAU_LADDER = tuple(Fraction(1, n) for n in (20, 40, 80, 160, 320))


def ode_accuracy(p: int, mu, nu, mode, taus: Sequence = ODE_TAU_LADDER, T: float = 1.0) -> list[dict]:
    """l2 error of the non-normal ODE at ``T`` over a step ladder."""
    poly = taylor_polynomial(p)
    cfg = SuperviscosityConfig(mu, nu, expand_energy(poly).k_star)
    errs = []
    for tau in taus:
        u = linear_run(poly, ODE_MATRIX, cfg, mode, None, np.ones(3), float(parse_rational(tau)), T)
        errs.append(float(np.linalg.norm(u - ode_exact_solution(T))))
    orders = observed_orders(errs, [float(parse_rational(t)) for t in taus])
    return [
        {"system": "ode3", "p": p, "mu": format_rational(cfg.mu), "nu": format_rational(cfg.nu), "mode": Mode.parse(mode).value, "tau": format_rational(parse_rational(t)), "l2": fmt(e), "l2_order": _fmt_order(o)}
        for t, e, o in zip(taus, errs, orders)
    ]


ADVECTION_ACCURACY_ROWS = ((1, 0, "0", "-1"), (2, 1, "1", "-1"), (3, 2, "0", "-1"), (4, 3, "1", "-1"), (5, 4, "0", "-1"))
ADVECTION_N_LADDER = (20, 40, 80, 160, 320)


def advection_errors(p: int, k: int, N: int, mu, nu, mode, *, cfl: float = 0.02, T: float = 1.0, alpha: float = -1.0, ic: str = "exp-sin"):
    space = DGSpace(N, k)
    poly = taylor_polynomial(p)
    cfg = SuperviscosityConfig(mu, nu, expand_energy(poly).k_star)
    L = build_advection_operator(space, alpha, sparse=True)
    f = _initial_condition(ic)
    u = linear_run(poly, L, cfg, mode, space.inner_product(), l2_project(f, space), cfl * space.h, T)
    return error_norms(u, lambda x: f(x - T), space)


def _ladder_rows(base: dict, Ns, errs) -> list[dict]:
    rows = []
    cols = list(zip(*errs))
    orders = [observed_orders(c, [1.0 / N for N in Ns]) for c in cols]
    for i, N in enumerate(Ns):
        row = dict(base, N=N)
        for name, c, o in zip(("l1", "l2", "linf"), cols, orders):
            row[name] = fmt(c[i])
            row[name + "_order"] = _fmt_order(o[i])
        rows.append(row)
    return rows


def advection_accuracy(p: int, k: int, mu, nu, mode, Ns: Sequence[int] = ADVECTION_N_LADDER, *, cfl: float = 0.02, T: float = 1.0, alpha: float = -1.0) -> list[dict]:
    errs = [advection_errors(p, k, N, mu, nu, mode, cfl=cfl, T=T, alpha=alpha) for N in Ns]
    base = {"system": "advection", "p": p, "k": k, "mu": format_rational(parse_rational(mu)), "nu": format_rational(parse_rational(nu)), "mode": Mode.parse(mode).value}
    return _ladder_rows(base, Ns, errs)


# ------------------------------------------------------------------ Burgers


@dataclass
class BurgersResult:
    space: DGSpace
    u: np.ndarray
    times: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    log: FilterLog = field(default_factory=FilterLog)

    def norm_series(self) -> list[dict]:
        n0 = self.norms[0]
        return [{"n": i, "t": f"{t:.10e}", "norm_change": f"{nm - n0:.10e}"} for i, (t, nm) in enumerate(zip(self.times, self.norms))]


def burgers_run(p: int, k: int, N: int, *, cfl: float = 0.05, T: float = 0.3, mode: str = "adaptive", nu=None, ic: str = "sin") -> BurgersResult:
    """Burgers with the entropy-conservative flux.

    ``mode``: ``plain`` (no filter), ``adaptive`` (norm-matching ``nu`` each
    step) or ``filtered`` (fixed ``nu``).  The filter uses
    ``D = (tau L_upwind)^k_star``.
    """
    tab = _tableau(p)
    k_star = expand_energy(tab.stability_polynomial()).k_star
    space = DGSpace(N, k)
    ip = space.inner_product()
    mode = str(mode).lower()
    if mode not in ("plain", "adaptive", "filtered"):
        raise ValueError(f"Burgers mode must be plain, adaptive or filtered, got {mode!r}")
    if mode == "filtered":
        if nu is None:
            raise ValueError("a fixed-coefficient filter needs nu")
        nu_fixed = float(parse_rational(nu))
    F = lambda u: burgers_rhs(u, space)  # noqa: E731
    result = BurgersResult(space, None)
    filters: dict[float, tuple] = {}

    def filt(dt):
        if dt not in filters:
            D = build_default_D(space, dt, k_star)
            filters[dt] = (D, adjoint(D, ip), default_D_norm(space, dt, k_star))
        return filters[dt]

    step_no = [0]

    def advance(u, dt):
        d = nonlinear_increment(tab, F, dt, u)
        up = u + d
        step_no[0] += 1
        if mode == "plain":
            return up
        D, Dt, Dn = filt(dt)
        if mode == "filtered":
            return up + nu_fixed * (Dt @ (D @ up))
        uF, rep = apply_adaptive_filter(u, up, D, ip, Dn, increment=d)
        result.log.append(step_no[0], result.times[-1] + dt, rep)
        return uF

    def observe(n, t, u):
        result.times.append(t)
        result.norms.append(ip.norm(u))

    u0 = l2_project(_initial_condition(ic), space)
    result.u = march(advance, u0, cfl * space.h, T, observe)
    return result


BURGERS_LADDERS = {2: (2, (40, 80, 160, 320, 640, 1280, 2560)), 5: (4, (20, 40, 80, 160))}


def burgers_accuracy(p: int, k: int | None = None, Ns: Sequence[int] | None = None, *, cfl: float = 0.05, T: float = 0.3) -> list[dict]:
    """Adaptive-filter Burgers errors at ``T`` against the characteristic solution."""
    dk, dN = BURGERS_LADDERS.get(p, (k, Ns))
    k = dk if k is None else k
    Ns = dN if Ns is None else Ns
    errs = []
    for N in Ns:
        res = burgers_run(p, k, N, cfl=cfl, T=T, mode="adaptive")
        errs.append(error_norms(res.u, lambda x: burgers_characteristic_solution(x, T), res.space))
    base = {"system": "burgers", "p": p, "k": k, "mu": "0/1", "nu": "adaptive", "mode": "adaptive"}
    return _ladder_rows(base, Ns, errs)


ACCURACY_COLUMNS = ["system", "p", "k", "mu", "nu", "mode", "N", "tau", "l1", "l1_order", "l2", "l2_order", "linf", "linf_order"]

# ------------------------------------------------------------------ energy and profiles


def energy_evolution(p: int = 1, k: int = 1, N: int = 80, *, cfl: float = 0.05, mu="0", nu="0", mode="plain", alpha: float = -1.0, T: float = 10.0, ic: str = "exp-sin", every: int = 1):
    """Series of ``||u^n|| - ||u^0||`` and the final sampled profile."""
    space = DGSpace(N, k)
    ip = space.inner_product()
    poly = taylor_polynomial(p)
    cfg = SuperviscosityConfig(mu, nu, expand_energy(poly).k_star)
    L = build_advection_operator(space, alpha, sparse=True)
    series = []
    n0 = []

    def observe(n, t, u):
        nm = ip.norm(u)
        if n == 0:
            n0.append(nm)
        if n % every == 0 or t == T:
            series.append({"n": n, "t": f"{t:.10e}", "norm_change": f"{nm - n0[0]:.10e}"})

    u = linear_run(poly, L, cfg, mode, ip, l2_project(_initial_condition(ic), space), cfl * space.h, T, observe)
    x, vals = sample(u, space)
    return series, x, vals


def discontinuous(p: int = 3, k: int = 2, N: int = 80, *, cfl: float = 0.05, mu="0", nu="-10", alpha: float = -1.0, T: float = 2 * math.pi, ic: str = "indicator"):
    """One period of the indicator data with plain, modified and filtered steps.

    Returns ``(x, profiles, summary)`` where ``summary`` has the overshoot
    above 1 and the undershoot below 0 of each profile.
    """
    space = DGSpace(N, k)
    ip = space.inner_product()
    poly = taylor_polynomial(p)
    k_star = expand_energy(poly).k_star
    L = build_advection_operator(space, alpha, sparse=True)
    u0 = l2_project(_initial_condition(ic), space)
    profiles = {}
    summary = []
    x = None
    for mode in ("plain", "modified", "filtered"):
        cfg = SuperviscosityConfig("0", "0", k_star) if mode == "plain" else SuperviscosityConfig(mu, nu, k_star)
        u = linear_run(poly, L, cfg, mode, ip, u0, cfl * space.h, T)
        x, vals = sample(u, space)
        profiles[mode] = vals
        summary.append({"mode": mode, "mu": format_rational(cfg.mu), "nu": format_rational(cfg.nu), "overshoot": fmt(max(vals.max() - 1.0, 0.0)), "undershoot": fmt(max(-vals.min(), 0.0))})
    return x, profiles, summary
