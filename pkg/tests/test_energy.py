import json
import math
import random
from fractions import Fraction

import pytest

from svrk.energy import (
    StabilityPolynomial,
    critical_bounds,
    expand_energy,
    expansion_to_json,
    leading_index,
    taylor_polynomial,
)
from svrk.rational import psd_check_rational

from reference_data import CRITICAL

F = Fraction


def test_taylor_examples():
    assert taylor_polynomial(1).coeffs == (1, 1)
    assert taylor_polynomial(3).coeffs == (1, 1, F(1, 2), F(1, 6))
    assert taylor_polynomial(6).coeffs[6] == F(1, 720)
    assert taylor_polynomial(4).order == 4


@pytest.mark.parametrize("p", [0, 13, 2.0])
def test_taylor_range(p):
    with pytest.raises(ValueError):
        taylor_polynomial(p)


def test_polynomial_invariants():
    with pytest.raises(ValueError):
        StabilityPolynomial((1, F(1, 2)))
    with pytest.raises(ValueError):
        StabilityPolynomial((1, 1, 0))


def test_expand_p1():
    e = expand_energy(taylor_polynomial(1))
    assert e.beta == {1: 1}
    assert e.gamma == ((-1,),)
    assert e.k_star == 1


def test_expand_p2():
    e = expand_energy(taylor_polynomial(2))
    assert e.beta == {1: 0, 2: F(1, 4)}
    assert e.gamma == ((-1, F(-1, 2)), (F(-1, 2), F(-1, 2)))
    assert e.k_star == 2


def test_expand_p3():
    e = expand_energy(taylor_polynomial(3))
    assert e.k_star == 2 and e.beta[2] == F(-1, 12)


@pytest.mark.parametrize("p", range(1, 7))
def test_critical_values(p):
    e = expand_energy(taylor_polynomial(p))
    b = critical_bounds(e, p)
    mu0, nu0 = CRITICAL[p]
    assert b.nu0 == F(nu0)
    assert (b.mu0 is None) == (mu0 == "-")
    if b.mu0 is not None:
        assert b.mu0 == F(mu0)
    assert b.nu0 == -e.beta[e.k_star] / 2


@pytest.mark.parametrize("p", range(1, 7))
def test_leading_index_and_vanishing_beta(p):
    e = expand_energy(taylor_polynomial(p))
    assert leading_index(e, p, require_theorem=True) == math.ceil((p + 1) / 2)
    assert all(e.beta[k] == 0 for k in range(1, e.k_star))
    assert e.beta[e.k_star] != 0
    n = e.k_star
    assert e.leading_submatrix == tuple(tuple(r[:n]) for r in e.gamma[:n])
    assert all(e.gamma[i][j] == e.gamma[j][i] for i in range(p) for j in range(p))


def test_leading_index_assertion():
    e = expand_energy(taylor_polynomial(2))
    with pytest.raises(AssertionError):
        leading_index(e, 4, require_theorem=True)


@pytest.mark.parametrize("p", [1, 3, 5])
def test_odd_orders_leading_submatrix_negative_definite(p):
    e = expand_energy(taylor_polynomial(p))
    res = psd_check_rational([[-x for x in row] for row in e.leading_submatrix])
    assert res.definite


@pytest.mark.parametrize("p", [2, 4, 6])
def test_even_orders_leading_block_negative_definite(p):
    e = expand_energy(taylor_polynomial(p))
    n = p // 2  # indices 0 .. p/2 - 1, i.e. all but the last row of Gamma*
    block = [[-x for x in row[:n]] for row in e.gamma[:n]]
    assert psd_check_rational(block).definite


def test_negative_gamma_star_p2_is_psd():
    e = expand_energy(taylor_polynomial(2))
    assert psd_check_rational([[-x for x in row] for row in e.leading_submatrix]).psd


def test_expansion_is_deterministic():
    for p in range(1, 7):
        assert expand_energy(taylor_polynomial(p)) == expand_energy(taylor_polynomial(p))


def test_json_round_trip():
    doc = json.loads(expansion_to_json(expand_energy(taylor_polynomial(6)), 6))
    assert doc["p"] == 6 and doc["k_star"] == 4
    assert doc["nu0"] == "-1/5760" and doc["mu0"] == "-1/4800"
    assert doc["beta"]["4"] == "1/2880"
    assert doc["beta"]["1"] == "0/1"
    odd = json.loads(expansion_to_json(expand_energy(taylor_polynomial(5)), 5))
    assert odd["mu0"] is None


# ------------------------------------------------------- exact energy identity


def _matvec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _random_seminegative(rng, n=4):
    """Skew part plus a negative semidefinite symmetric part, scaled small."""
    K = [[F(rng.randint(-5, 5), rng.randint(1, 6)) for _ in range(n)] for _ in range(n)]
    B = [[F(rng.randint(-3, 3), rng.randint(1, 4)) for _ in range(n)] for _ in range(n)]
    scale = F(1, rng.randint(5, 20))
    return [[scale * ((K[i][j] - K[j][i]) - sum(B[m][i] * B[m][j] for m in range(n))) for j in range(n)] for i in range(n)]


def _random_polynomial(rng):
    if rng.random() < 0.5:
        return taylor_polynomial(rng.randint(1, 6))
    s = rng.randint(2, 6)
    coeffs = [F(1), F(1)] + [F(rng.randint(-3, 3) or 1, rng.randint(1, 30)) for _ in range(s - 1)]
    return StabilityPolynomial(tuple(coeffs))


@pytest.mark.parametrize("seed", range(50))
def test_energy_identity_exact(seed):
    rng = random.Random(seed)
    poly = _random_polynomial(rng)
    Z = _random_seminegative(rng)
    u = [F(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(4)]
    powers = [u]
    for _ in range(poly.stages):
        powers.append(_matvec(Z, powers[-1]))
    Ru = [sum(a * p[i] for a, p in zip(poly.coeffs, powers)) for i in range(4)]
    lhs = _dot(Ru, Ru) - _dot(u, u)

    def semi(v, w):
        return -_dot(_matvec(Z, v), w) - _dot(v, _matvec(Z, w))

    e = expand_energy(poly)
    s = poly.stages
    rhs = sum(e.beta[k] * _dot(powers[k], powers[k]) for k in range(1, s + 1))
    rhs += sum(e.gamma[i][j] * semi(powers[i], powers[j]) for i in range(s) for j in range(s))
    assert lhs == rhs
