"""Superviscosity-stabilized explicit Runge-Kutta methods.

Energy expansion of RK stability polynomials, critical superviscosity
values, modified and filtered steppers with exact strong-stability
certificates, a 1D modal DG discretization and an adaptive filter for
nonlinear problems.
"""
from .adaptive import AdaptiveFilterReport, FilterLog, adaptive_nu, apply_adaptive_filter, build_default_D
from .dg import DGSpace, build_advection_operator, build_advection_operator_exact, burgers_rhs, entropy_flux
from .energy import StabilityPolynomial, critical_bounds, expand_energy, leading_index, taylor_polynomial
from .linops import (
    InnerProduct,
    adjoint,
    norm_excess_exact,
    norm_excess_float,
    operator_norm_exact,
    operator_norm_float,
    strong_stability_certificate,
)
from .rational import parse_rational, psd_check_rational
from .rk import FEHLBERG_6_5, HEUN, ButcherTableau, linear_order_check, nonlinear_step
from .superviscosity import LinearStepper, Mode, SuperviscosityConfig, one_step_operator

__version__ = "0.1.0"

__all__ = [
    "AdaptiveFilterReport",
    "FilterLog",
    "adaptive_nu",
    "apply_adaptive_filter",
    "build_default_D",
    "DGSpace",
    "build_advection_operator",
    "build_advection_operator_exact",
    "burgers_rhs",
    "entropy_flux",
    "StabilityPolynomial",
    "critical_bounds",
    "expand_energy",
    "leading_index",
    "taylor_polynomial",
    "InnerProduct",
    "adjoint",
    "norm_excess_exact",
    "norm_excess_float",
    "operator_norm_exact",
    "operator_norm_float",
    "strong_stability_certificate",
    "parse_rational",
    "psd_check_rational",
    "FEHLBERG_6_5",
    "HEUN",
    "ButcherTableau",
    "linear_order_check",
    "nonlinear_step",
    "LinearStepper",
    "Mode",
    "SuperviscosityConfig",
    "one_step_operator",
]
