from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halfsign.arith import factorize, is_squarefree, kronecker, squarefree_upto
from halfsign.context import DomainError, MissingEigenvalueError, NeedsMoreCoefficients
from halfsign.lift import (
    chi_t,
    deligne_check,
    determine_a2,
    dirichlet_identity_check,
    lemma_bound_check,
    lift_from_eigenvalues,
    preb_grid,
    verify_preb,
)
from halfsign.qspace import HalfIntegralForm


def test_chi_t_trivial_t1():
    assert all(chi_t(1, n, 9) == 1 for n in range(1, 60, 2))


def test_chi_t_at_two_is_zero():
    # the Kronecker value (3/2) = -1 is not what the identity needs at n = 2
    assert kronecker(3, 2) == -1
    assert chi_t(3, 2, 9) == 0
    assert chi_t(3, 2, 9, even="kronecker") == -1


def test_chi_t_shared_factor():
    assert chi_t(15, 3, 9) == 0 and chi_t(15, 5, 9) == 0
    assert chi_t(6, 9, 9) == 0


def test_chi_t_sign_twist():
    # k = 11: (-1)^5 = -1, so chi_1(3) = (-1/3) = -1
    assert chi_t(1, 3, 11) == -1
    assert chi_t(1, 3, 9) == 1


def test_chi_t_rejects_non_squarefree():
    with pytest.raises(DomainError):
        chi_t(4, 3, 9)


def test_a2_data_driven(form9):
    assert determine_a2(form9) == -8


def test_lift_examples(lift9):
    A = lift9.A
    assert A[:10] == [0, 1, -8, 12, 64, -210, -96, 1016, -512, -2043]
    assert A[1] == 1
    assert A[15] == A[3] * A[5]
    assert A[9] == A[3] ** 2 - 3**7


@settings(max_examples=50)
@given(st.integers(1, 100), st.integers(1, 100))
def test_lift_multiplicative(lift9, m, n):
    from math import gcd

    if gcd(m, n) == 1 and m * n <= lift9.M:
        assert lift9.A[m * n] == lift9.A[m] * lift9.A[n]


def test_lift_missing_eigenvalue(form9):
    bare = HalfIntegralForm(form9.k, form9.N, form9.c, form9.coords, {3: Fraction(12)}, form9.scale)
    with pytest.raises(MissingEigenvalueError, match="5"):
        lift_from_eigenvalues(bare, 10)


def test_preb_examples(form9, lift9):
    assert verify_preb(form9, lift9, 7, 1).ok
    assert verify_preb(form9, lift9, 1, 2).ok
    assert verify_preb(form9, lift9, 2, 3).ok


def test_preb_range(form9, lift9):
    with pytest.raises(NeedsMoreCoefficients):
        verify_preb(form9, lift9, 3, 60)
    with pytest.raises(DomainError):
        verify_preb(form9, lift9, 4, 1)


def test_preb_full_grid(form9, lift9):
    results = preb_grid(form9, lift9, 10_000)
    assert all(r.ok for r in results)
    assert len(results) == sum(int((10_000 // t) ** 0.5) for t in squarefree_upto(10_000))


def test_preb_needs_zero_at_two(form9, lift9):
    """With the Kronecker value at n = 2 the identity breaks, e.g. at (t, n) = (3, 2)."""
    e = (form9.k - 3) // 2
    t, n = 3, 2
    rhs = form9.c[t] * sum(
        chi_t(t, n // m, 9, even="kronecker") * (1 if n // m == 1 else -1) * (n // m) ** e * lift9.A[m] for m in (1, 2)
    )
    assert rhs != form9.c[t * n * n]


def test_lemma_bound(form9):
    rep = lemma_bound_check(form9, 10, 30, 0.5)
    assert not rep.growing
    assert rep.per_n[1] == 1.0
    assert rep.max_ratio < 10


def test_lemma_bound_excludes_zero_rows(form9):
    rep = lemma_bound_check(form9, 30, 3, 0.5)
    assert rep.excluded_t == [t for t in squarefree_upto(30) if form9.c[t] == 0]


def test_deligne(lift9):
    assert deligne_check(lift9) == (True, None)


def test_dirichlet_identity(form9, lift9):
    for t in (1, 2, 3):
        rep = dirichlet_identity_check(form9, lift9, t)
        assert rep.ok, rep
