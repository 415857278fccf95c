import csv
import math
from fractions import Fraction

import numpy as np
from numpy.polynomial import legendre
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from svrk.dg import (
    DGSpace,
    advection_blocks,
    block_circulant_norm,
    build_advection_operator,
    build_advection_operator_exact,
    burgers_characteristic_solution,
    burgers_rhs,
    entropy_flux,
    error_norms,
    evaluate,
    indicator,
    jumps,
    l2_project,
    sample,
    shift_cells,
    write_coefficients_csv,
    write_samples_csv,
)
from svrk.linops import adjoint, operator_norm_float
from svrk.rational import mpq_matrix

seeds = st.integers(0, 2**31 - 1)
alphas = st.sampled_from([-1.0, -0.5, 0.0, -0.25, 0.5, 1.0])


def test_space_validation():
    with pytest.raises(ValueError):
        DGSpace(1, 2)
    with pytest.raises(ValueError):
        DGSpace(4, 9)
    s = DGSpace(4, 2)
    assert s.dim == 12 and s.h == pytest.approx(math.pi / 2)
    assert np.allclose(s.mass_weights[:3], s.h / np.array([1, 3, 5]))
    with pytest.raises(ValueError):
        build_advection_operator(s, -1.5)


def test_piecewise_constant_upwind():
    hL = build_advection_operator_exact(DGSpace(3, 0), -1)
    assert np.array_equal(hL, mpq_matrix([[-1, 0, 1], [1, -1, 0], [0, 1, -1]]))
    fl = build_advection_operator(DGSpace(3, 0), -1.0) * DGSpace(3, 0).h
    assert np.allclose(fl, [[-1, 0, 1], [1, -1, 0], [0, 1, -1]], atol=1e-15)


@pytest.mark.parametrize("k", range(0, 5))
@pytest.mark.parametrize("alpha", ["-1", "-1/2", "0", "1/3"])
def test_exact_adjoint_identity(k, alpha):
    space = DGSpace(4, k)
    ip = space.exact_inner_product()
    La = build_advection_operator_exact(space, alpha)
    Lm = build_advection_operator_exact(space, str(-Fraction(alpha)))
    assert np.array_equal(adjoint(La, ip), -Lm)


@settings(max_examples=60)
@given(seeds, st.integers(0, 5), st.integers(2, 12), alphas)
def test_jump_energy_identity(seed, k, N, alpha):
    rng = np.random.default_rng(seed)
    space = DGSpace(N, k)
    v = rng.standard_normal(space.dim)
    L = build_advection_operator(space, alpha)
    lhs = space.inner_product().dot(L @ v, v)
    rhs = 0.5 * alpha * float(np.sum(jumps(v, space) ** 2))
    assert abs(lhs - rhs) <= 1e-12 * (1 + np.sum(np.abs(v)) ** 2 / space.h)


@settings(max_examples=50)
@given(seeds, st.integers(0, 5), st.integers(2, 12), st.sampled_from([-1.0, -0.5, -0.1]))
def test_semi_negativity(seed, k, N, alpha):
    rng = np.random.default_rng(seed)
    space = DGSpace(N, k)
    v = rng.standard_normal(space.dim)
    assert space.inner_product().dot(build_advection_operator(space, alpha) @ v, v) <= 1e-12


@settings(max_examples=30)
@given(seeds, st.integers(0, 4), st.integers(2, 10), st.sampled_from(["-1", "-1/2", "0", "1/3"]))
def test_translation_equivariance(seed, k, N, alpha):
    rng = np.random.default_rng(seed)
    space = DGSpace(N, k)
    v = mpq_matrix([Fraction(int(x), 7) for x in rng.integers(-20, 20, space.dim)])
    L = build_advection_operator_exact(space, alpha)
    assert np.array_equal(L @ shift_cells(v, space), shift_cells(L @ v, space))
    vf = np.array([float(x) for x in v])
    Lf = build_advection_operator(space, float(Fraction(alpha)))
    assert np.allclose(Lf @ shift_cells(vf, space), shift_cells(Lf @ vf, space), rtol=1e-13, atol=1e-13)


def test_stencil_independent_of_N():
    k, n = 2, 3
    a = build_advection_operator_exact(DGSpace(5, k), -1)
    b = build_advection_operator_exact(DGSpace(9, k), -1)
    # interior row block of cell 2: left, self and right neighbours
    assert np.array_equal(a[2 * n : 3 * n, n : 4 * n], b[2 * n : 3 * n, n : 4 * n])


def test_block_circulant_norm_matches_dense():
    for k, N in ((0, 6), (2, 10), (4, 7)):
        space = DGSpace(N, k)
        pattern = 1.0 / (2.0 * np.arange(k + 1) + 1.0)
        L = build_advection_operator(space, -1.0) * space.h
        for power in (1, 2):
            dense = operator_norm_float(np.linalg.matrix_power(0.1 * L, power), space.inner_product())
            assert block_circulant_norm(advection_blocks(k, -1.0), pattern, N, power, 0.1) == pytest.approx(dense, rel=1e-12)


def test_projection_of_constant_and_linear():
    space = DGSpace(6, 3)
    c = l2_project(lambda x: np.full_like(x, 2.5), space).reshape(6, 4)
    assert np.allclose(c[:, 0], 2.5, atol=1e-14) and np.abs(c[:, 1:]).max() < 1e-14
    u = l2_project(lambda x: x, space)
    xi = np.linspace(-1, 1, 7)
    assert np.allclose(evaluate(u, space, xi), space.physical(xi), atol=1e-13)


def test_projection_order():
    f = lambda x: np.exp(np.sin(x))
    errs = [error_norms(l2_project(f, DGSpace(N, 2)), f, DGSpace(N, 2))[1] for N in (20, 40, 80)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(o - 3) < 0.1 for o in orders)


def test_error_norms_self_zero():
    rng = np.random.default_rng(0)
    space = DGSpace(7, 3)
    u = rng.standard_normal(space.dim)

    def exact(X):
        # row j of X holds points of cell j; map them back to the reference cell
        xi = 2 * (X - space.left_edges[:, None]) / space.h - 1
        U = space.reshape(u)
        return np.array([legendre.legval(xi[j], U[j]) for j in range(space.N)])

    assert all(e < 1e-13 for e in error_norms(u, exact, space))


def test_entropy_flux_examples():
    assert entropy_flux(1.0, 2.0) == pytest.approx(7 / 6, abs=1e-15)
    assert entropy_flux(3.0, 3.0) == pytest.approx(4.5)


def test_burgers_constant_state():
    space = DGSpace(8, 3)
    u = l2_project(lambda x: np.full_like(x, 0.7), space)
    assert np.abs(burgers_rhs(u, space)).max() < 1e-13


@settings(max_examples=60)
@given(seeds, st.integers(0, 6), st.integers(2, 16))
def test_burgers_entropy_conservation(seed, k, N):
    rng = np.random.default_rng(seed)
    space = DGSpace(N, k)
    u = rng.standard_normal(space.dim)
    r = burgers_rhs(u, space)
    scale = float(np.sum(np.abs(r) * space.mass_weights * np.abs(u)))
    assert abs(space.inner_product().dot(r, u)) <= 1e-12 * (1 + scale)


def test_burgers_rhs_consistency():
    # smooth data: the DG residual approximates -(u^2/2)_x = -sin x cos x
    space = DGSpace(80, 3)
    u = l2_project(np.sin, space)
    r = burgers_rhs(u, space)
    err = error_norms(r, lambda x: -np.sin(x) * np.cos(x), space)[1]
    assert err < 1e-5


def test_characteristic_solution():
    x = np.linspace(0, 2 * np.pi, 41)
    t = 0.3
    u = burgers_characteristic_solution(x, t)
    assert np.allclose(u, np.sin(x - u * t), atol=1e-13)
    assert np.array_equal(burgers_characteristic_solution(x, 0.0), np.sin(x))
    with pytest.raises(ValueError):
        burgers_characteristic_solution(x, 1.0)


def test_indicator():
    f = indicator()
    assert list(f(np.array([0.0, math.pi, 4.0, 5.0]))) == [0.0, 1.0, 1.0, 0.0]


def test_csv_dumps(tmp_path):
    space = DGSpace(3, 1)
    u = np.arange(6, dtype=float)
    write_coefficients_csv(tmp_path / "c.csv", u, space)
    rows = list(csv.reader(open(tmp_path / "c.csv")))
    assert rows[0] == ["cell", "mode", "coefficient"] and len(rows) == 7
    assert rows[4][:2] == ["1", "1"] and float(rows[4][2]) == 3.0
    x, vals = sample(u, space)
    assert len(x) == 30 and x[0] == pytest.approx(space.h / 20)
    write_samples_csv(tmp_path / "s.csv", {"u": vals}, x)
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == ["x", "u"] and len(rows) == 31


def test_exact_operator_entries_rational():
    hL = build_advection_operator_exact(DGSpace(4, 3), "-1/2")
    assert all(isinstance(x, type(mpq(0))) for x in hL.flat)
