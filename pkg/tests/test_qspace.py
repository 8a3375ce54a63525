import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halfsign.arith import sigma
from halfsign.context import DomainError, NeedsMoreCoefficients, UnsupportedWeightError
from halfsign.qspace import (
    ExactSeries,
    cusp_subspace,
    eigenbasis,
    f2_series,
    hecke_matrix,
    hecke_T4,
    hecke_T_p2,
    monomial_basis,
    monomial_combination,
    monomial_exponents,
    theta_series,
    verify_eigen,
)


def test_theta_series():
    th = theta_series(200)
    assert th.coeff(0) == 1
    assert th.coeff(4) == 2
    assert th.coeff(5) == 0
    assert sum(th.coeff(n) for n in range(101)) == 21


def test_f2_series():
    F = f2_series(100)
    assert F.coeff(1) == 1 and F.coeff(3) == 4 and F.coeff(15) == 24
    assert all(F.coeff(n) == (sigma(1, n) if n % 2 else 0) for n in range(1, 101))


def test_monomial_basis_sizes():
    assert monomial_exponents(1) == [(1, 0)]
    assert sorted(monomial_exponents(9)) == [(1, 2), (5, 1), (9, 0)]
    assert len(monomial_basis(13, 50)) == 4
    assert len(monomial_basis(9, 50)) == 3


def test_theta_squared_counts_representations():
    th2 = theta_series(100) ** 2
    for n in range(101):
        r2 = sum(1 for a in range(-11, 12) for b in range(-11, 12) if a * a + b * b == n)
        assert th2.coeff(n) == r2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(max_denominator=20), min_size=5, max_size=5), st.lists(st.fractions(max_denominator=20), min_size=5, max_size=5))
def test_exact_series_ring_laws(a, b):
    A = ExactSeries.from_coefficients(a, order=4)
    B = ExactSeries.from_coefficients(b, order=4)
    assert A * B == B * A
    assert (A + B) * A == A * A + B * A
    assert (A - B) + B == A
    # the product is exact: coefficient 4 is the Cauchy sum
    assert (A * B).coeff(4) == sum(a[i] * b[4 - i] for i in range(5))


def test_exact_series_truncation_discipline():
    A = ExactSeries.from_coefficients([1, 2, 3], order=2)
    B = ExactSeries.from_coefficients([1, 1, 1, 1, 1], order=4)
    assert (A * B).order == 2
    with pytest.raises(Exception):
        (A * B).coeff(3)


def test_cusp_subspace_dimensions():
    assert len(cusp_subspace(5, 100)) == 0
    assert len(cusp_subspace(9, 200)) == 1
    assert len(cusp_subspace(13, 200)) == 2
    assert len(cusp_subspace(17, 200)) == 3


def test_cusp_subspace_refuses_short_order():
    with pytest.raises(NeedsMoreCoefficients, match="need m <= 16"):
        cusp_subspace(9, 10)


def test_k9_form(form9):
    assert form9.first_index == 1 and form9.c[1] == 1
    assert form9.c[:8] == [0, 1, -6, 12, -8, 0, 12, -48]
    assert form9.coords == [0, 1, -16]
    assert form9.eigenvalues[3] == 12 and form9.eigenvalues[5] == -210 and form9.eigenvalues[7] == 1016


def test_k9_eigenvalue_is_direct_quotient(form9):
    img = hecke_T_p2(form9.c, 3, 9)
    assert Fraction(img[1], form9.c[1]) == form9.eigenvalues[3]
    assert all(img[n] == 12 * form9.c[n] for n in range(len(img)))


def test_hecke_zero_and_linearity():
    assert hecke_T_p2([0] * 200, 3, 9) == [0] * (200 // 9 + 1)
    f = monomial_combination([1, 2, 3], 9, 500).numerators()
    g = monomial_combination([Fraction(1, 2), -1, 7], 9, 500).coefficients()
    s = [Fraction(x) + y for x, y in zip(f, g)]
    lhs = hecke_T_p2(s, 5, 9)
    rhs = [Fraction(x) + y for x, y in zip(hecke_T_p2(f, 5, 9), hecke_T_p2(g, 5, 9))]
    assert lhs == rhs


def test_hecke_rejects_bad_prime():
    with pytest.raises(DomainError):
        hecke_T_p2([0] * 50, 2, 9)
    with pytest.raises(DomainError):
        hecke_T_p2([0] * 50, 9, 9)


def test_hecke_commutes_k17():
    basis = cusp_subspace(17, 3000)
    mats = {p: hecke_matrix(basis, p) for p in (3, 5, 7)}
    for p in mats:
        for q in mats:
            assert mats[p] * mats[q] == mats[q] * mats[p]


def test_hecke_stability_k13():
    basis = cusp_subspace(13, 3000)
    hecke_matrix(basis, 3)  # raises ValidationError if the image leaves the span


def test_eigenbasis_k13_and_tie_break():
    forms = eigenbasis(13, 3000)
    assert len(forms) == 2
    assert all(verify_eigen(f) for f in forms)
    keys = [(tuple(f.eigenvalues[p] for p in (3, 5, 7)), f.first_index) for f in forms]
    assert keys == sorted(keys)


def test_eigenbasis_empty_primes():
    basis = cusp_subspace(9, 300)
    assert eigenbasis(9, 300, ()) == basis


def test_normalization_invariance(form9):
    scaled = [7 * x for x in form9.c]
    for p in (3, 5):
        img = hecke_T_p2(scaled, p, 9)
        assert Fraction(img[1], scaled[1]) == form9.eigenvalues[p]


def test_truncation_discipline(form9):
    small = eigenbasis(9, 5000)[0]
    assert small.c == form9.c[:5001]


def test_T4_is_consistency_only(form9):
    b = hecke_T4(form9.c)
    assert all(b[n] == form9.c[4 * n] for n in range(len(b)))


def test_unsupported_weight_is_explicit():
    # T(9) on weight 25/2 has an irreducible quadratic factor over Q
    with pytest.raises(UnsupportedWeightError, match="irreducible factor"):
        eigenbasis(25, 2000, (3,))
