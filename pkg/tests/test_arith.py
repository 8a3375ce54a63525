import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from halfsign.arith import (
    divisors,
    epsilon,
    gamma0_4_sample,
    gauss_sum,
    is_cubefree,
    is_squarefree,
    jacobi,
    kronecker,
    mobius,
    mobius_apply,
    multiplier_residual,
    ramanujan_sum,
    sigma,
    squarefree_decompose,
    theta_multiplier,
    theta_value,
)
from halfsign.context import DomainError, EvalContext

CTX = EvalContext(digits=30)


def brute_qr_symbol(a, p):
    """Legendre symbol by searching for square roots mod an odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if any(x * x % p == a for x in range(1, p)) else -1


def brute_jacobi(a, n):
    out = 1
    m = n
    p = 2
    while m > 1:
        while m % p == 0:
            out *= brute_qr_symbol(a, p)
            m //= p
        p += 1
    return out


@pytest.mark.parametrize("c, d, expected", [(1, 7, 1), (-1, 3, -1), (2, 15, 1)])
def test_kronecker_examples(c, d, expected):
    assert kronecker(c, d) == expected


def test_kronecker_two_fifteen_by_residues():
    # (2/15) = (2/3)(2/5) = (-1)(-1)
    assert brute_qr_symbol(2, 3) * brute_qr_symbol(2, 5) == 1


@given(st.integers(-500, 500), st.integers(0, 200))
def test_jacobi_matches_factorwise_legendre(a, j):
    n = 2 * j + 3
    assert jacobi(a, n) == brute_jacobi(a, n)


@given(st.integers(-300, 300), st.integers(-300, 300), st.integers(0, 150))
def test_kronecker_multiplicative_in_numerator(a, b, j):
    d = 2 * j + 1
    assert kronecker(a * b, d) == kronecker(a, d) * kronecker(b, d)


@given(st.integers(-300, 300), st.integers(1, 300))
def test_kronecker_zero_iff_common_factor(c, d):
    v = kronecker(c, d)
    assert v in (-1, 0, 1)
    assert (v == 0) == (math.gcd(c, d) > 1)


def test_kronecker_negative_denominator_convention():
    assert kronecker(-1, -1) == -1
    assert kronecker(1, -1) == 1
    assert kronecker(0, 1) == 1
    assert kronecker(0, -1) == 1
    assert kronecker(3, -7) == kronecker(3, 7)
    assert kronecker(-3, -7) == -kronecker(-3, 7)


def test_epsilon_cases():
    assert epsilon(1) == 1
    assert epsilon(3) == mpmath.mpc(0, 1)
    assert epsilon(7) == mpmath.mpc(0, 1)
    with pytest.raises(DomainError):
        epsilon(4)


@pytest.mark.parametrize("d", range(1, 100, 2))
def test_gauss_sum_identity(d):
    with mpmath.workdps(40):
        assert abs(gauss_sum(d, CTX) - epsilon(d) * mpmath.sqrt(d)) < mpmath.mpf(10) ** -30


@pytest.mark.parametrize("r, expected", [(1, 1), (4, 0), (30, -1), (7, -1), (6, 1)])
def test_mobius(r, expected):
    assert mobius(r) == expected


@pytest.mark.parametrize("m, expected", [(1, (1, 1)), (12, (3, 2)), (360, (10, 6))])
def test_squarefree_decompose_examples(m, expected):
    assert squarefree_decompose(m) == expected


def test_squarefree_decompose_roundtrip():
    for m in range(1, 100_001):
        t, n = squarefree_decompose(m)
        assert t * n * n == m and mobius(t) != 0


def test_divisor_functions():
    assert divisors(4) == [1, 2, 4]
    assert sigma(1, 5) == 6
    assert not is_cubefree(8)
    assert is_cubefree(12)
    assert is_squarefree(30) and not is_squarefree(18)


@given(st.integers(1, 60), st.integers(-200, 200))
def test_ramanujan_sum_brute_force(d, m):
    direct = sum(mpmath.expjpi(2 * mpmath.mpf(m * u) / d) for u in range(d) if math.gcd(u, d) == 1)
    assert abs(direct - ramanujan_sum(d, m)) < 1e-9


def test_multiplier_trivial_matrices():
    i = mpmath.mpc(0, 1)
    assert abs(theta_multiplier(((1, 0), (0, 1)), i, CTX) - 1) < 1e-40
    assert abs(theta_multiplier(((1, 1), (0, 1)), i, CTX) - 1) < 1e-40


def test_multiplier_against_theta_quotient():
    g = ((1, 0), (4, 1))
    z = mpmath.mpc(0, 1)
    with CTX.workdps():
        w = mobius_apply(g, z)
        q = theta_value(w, CTX)[0] / theta_value(z, CTX)[0]
        assert abs(q - theta_multiplier(g, z, CTX)) < mpmath.mpf(10) ** -28


def test_multiplier_modulus():
    for g in gamma0_4_sample(20, seed=3):
        z = mpmath.mpc(0.3, 0.7)
        (a, b), (c, d) = g
        with CTX.workdps():
            assert abs(abs(theta_multiplier(g, z, CTX)) ** 2 - abs(c * z + d)) < mpmath.mpf(10) ** -30


def test_multiplier_rejects_non_gamma0_4():
    with pytest.raises(DomainError):
        theta_multiplier(((1, 0), (2, 1)), mpmath.mpc(0, 1), CTX)


def test_multiplier_sample_matches_theta():
    pts = [mpmath.mpc(0.1, 0.8), mpmath.mpc(-0.3, 1.1)]
    worst = max(multiplier_residual(g, z, CTX) for g in gamma0_4_sample(30, seed=1) for z in pts)
    assert worst < 1e-25


def _matmul(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 199), st.integers(0, 199))
def test_multiplier_cocycle(i, j):
    gs = gamma0_4_sample(200, seed=7, cmax=12)
    g1, g2 = gs[i], gs[j]
    z = mpmath.mpc(0.2, 0.9)
    with CTX.workdps():
        lhs = theta_multiplier(_matmul(g1, g2), z, CTX)
        rhs = theta_multiplier(g1, mobius_apply(g2, z), CTX) * theta_multiplier(g2, z, CTX)
        assert abs(lhs - rhs) < mpmath.mpf(10) ** -30 * abs(lhs)
