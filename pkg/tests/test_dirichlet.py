import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfsign.arith import is_squarefree, mobius
from halfsign.context import ConvergenceError, DomainError, EvalContext, NeedsMoreCoefficients
from halfsign.dirichlet import (
    HorocycleSeries,
    a_float,
    contour_check,
    d_r_bound_scan,
    d_r_direct,
    d_r_eval,
    direct_sqfree_sum,
    growth_exponent_fit,
    iwaniec_check,
    m_eval,
    sign_changes,
    smoothed_sum_second_moment,
    smoothed_sum_sqfree,
    to_csv,
    to_json,
    verify_pairs,
)
from halfsign.qspace import HalfIntegralForm

# Frozen from the first scan of the weight 9/2 eigenform (exact integer signs).
SIGN_CHANGES_1E3 = 252
SIGN_CHANGES_1E4 = 2548


@pytest.fixture(autouse=True)
def _compare_at_high_precision():
    with mpmath.workdps(50):
        yield


@pytest.fixture(scope="module")
def horo(form9):
    return HorocycleSeries(form9, 6, digits=30)


def synthetic(c):
    return HalfIntegralForm(9, len(c) - 1, c, [0, 1, -16], {}, 1)


def test_d_r_direct_domain(form9):
    with pytest.raises(DomainError):
        d_r_direct(form9, 1, 1.0)


def test_d_r_direct_empty(form9):
    r = d_r_direct(form9, 101, 2)
    assert r.value == 0 and r.certified_error > 0


def test_d_r_direct_multiples_of_four(form9):
    r = d_r_direct(form9, 2, 2)
    with mpmath.workdps(40):
        ref = mpmath.fsum(mpmath.mpf(form9.c[m]) / mpmath.power(m, mpmath.mpf(9) / 4 - mpmath.mpf(1) / 2 + 2) for m in range(4, form9.N + 1, 4))
    assert abs(r.value - ref) < 1e-35


def test_d_r_direct_tail_infinite_near_abscissa(form9):
    assert math.isinf(d_r_direct(form9, 1, 1.2).certified_error)


@pytest.mark.parametrize("r", [1, 2, 3, 6])
def test_d_r_eval_vs_direct(form9, ev30, ctx30, r):
    a = d_r_eval(form9, r, 2, ctx30, ev30)
    b = d_r_direct(form9, r, 2, ctx=ctx30)
    assert abs(a.value - b.value) <= a.certified_error + b.certified_error


def test_d_r_eval_precision_doubling(form9):
    lo = d_r_eval(form9, 2, 0.8, EvalContext(digits=30))
    hi = d_r_eval(form9, 2, 0.8, EvalContext(digits=60))
    assert abs(lo.value - hi.value) <= lo.certified_error + 1e-40


def test_d_r_eval_flags_non_squarefree(form9, ev30, ctx30):
    assert d_r_eval(form9, 4, 2, ctx30, ev30).truncation.get("excluded_from_M")


@pytest.mark.parametrize("r", [1, 2, 3, 5, 6])
def test_horocycle_matches_ladder(form9, horo, ev30, ctx30, r):
    s = mpmath.mpc(0.9, 7)
    a = horo.d_r(r, s)
    b = d_r_eval(form9, r, s, ctx30, ev30)
    assert abs(a.value - b.value) < 1e-25 * max(1, abs(b.value))


def test_horocycle_merged_equals_sum(horo):
    s = mpmath.mpc(2, 3)
    merged = horo.m_value(s)
    parts = sum(mobius(r) * horo.d_r(r, s).value for r in range(1, 7) if is_squarefree(r))
    assert abs(complex(merged.real.mid(), merged.imag.mid()) - complex(parts)) < 1e-20


def test_horocycle_non_squarefree_opt_in(horo):
    with pytest.raises(DomainError):
        horo.d_r(4, 2)


def test_bound_scan(form9):
    full = HorocycleSeries(form9, 6, digits=20, include_nonsquarefree=True)
    scan = d_r_bound_scan(form9, range(1, 7), 1.2, 0.0, evaluator=full)
    assert [row[0] for row in scan.rows] == list(range(1, 7))
    assert [row[4] for row in scan.rows] == [is_squarefree(r) for r in range(1, 7)]
    assert scan.const_right < 10


def test_m_eval_domain(form9):
    with pytest.raises(DomainError):
        m_eval(form9, 0.7)


def test_m_eval_near_direct(form9, horo, ctx30):
    m = m_eval(form9, 2, ctx30, 6, "horocycle", horo)
    direct = direct_sqfree_sum(form9, 2, ctx30)
    assert abs(m.value - direct.value) <= m.certified_error + direct.certified_error


def test_m_eval_cauchy_and_fit(form9, horo, ctx30):
    m = m_eval(form9, mpmath.mpc(0.8, 10), ctx30, 6, "horocycle", horo)
    t = m.truncation
    assert t["r_max"] == 6 and t["e"] > 1 and m.certified_error >= t["cauchy_half"]


def test_smoothed_small_x_limit(form9):
    assert abs(smoothed_sum_sqfree(form9, 0.05, 1000) - a_float(form9)[1] * math.exp(-1 / 0.05)) < 1e-12


def test_smoothed_t_max_doubling(form9):
    a, tail = smoothed_sum_sqfree(form9, 100, 2500, with_tail=True)
    b = smoothed_sum_sqfree(form9, 100, 5000)
    assert abs(a - b) <= tail + 1e-15


def test_smoothed_preconditions(form9):
    with pytest.raises(DomainError):
        smoothed_sum_sqfree(form9, 100, 1000)
    with pytest.raises(NeedsMoreCoefficients):
        smoothed_sum_sqfree(form9, 100, 20000)


def test_second_moment_zero_and_positive(form9):
    assert smoothed_sum_second_moment(synthetic([0] * 3001), 100) == 0
    assert smoothed_sum_second_moment(form9, 100) > 0


def test_growth_fit_synthetic():
    xs = [10 ** (2 + 0.5 * i) for i in range(5)]
    assert abs(growth_exponent_fit([(x, x) for x in xs]).exponent - 1) < 1e-12
    assert abs(growth_exponent_fit([(x, 3 * x**0.75) for x in xs]).exponent - 0.75) < 1e-12
    with pytest.raises(DomainError):
        growth_exponent_fit([(x, x) for x in xs[:3]])


@settings(max_examples=25)
@given(st.floats(0.1, 2.0), st.floats(0.01, 100))
def test_growth_fit_recovers_power(e, c):
    xs = [10 ** (1 + 0.7 * i) for i in range(5)]
    fit = growth_exponent_fit([(x, c * x**e) for x in xs])
    assert abs(fit.exponent - e) < 1e-9 and fit.band[0] <= fit.exponent <= fit.band[1]


def test_sign_changes_constant_table():
    rep = sign_changes(synthetic([0] + [1] * 1000), 1000)
    assert rep.count == 0 and rep.zero_count == 0


def test_sign_changes_frozen(form9):
    small = sign_changes(form9, 1000)
    large = sign_changes(form9, 10_000)
    assert small.count == SIGN_CHANGES_1E3 and small.count >= 10
    assert large.count == SIGN_CHANGES_1E4 > small.count
    assert verify_pairs(form9, small)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=50, max_size=400))
def test_sign_changes_property(vals):
    f = synthetic([0] + vals)
    rep = sign_changes(f, len(vals))
    assert verify_pairs(f, rep)
    nz = [v for t, v in enumerate([0] + vals) if t and is_squarefree(t) and v]
    assert rep.count == sum(1 for a, b in zip(nz, nz[1:]) if a * b < 0)


@settings(max_examples=10, deadline=None)
@given(st.integers(100, 10_000), st.integers(100, 10_000))
def test_sign_changes_monotone(form9, a, b):
    lo, hi = sorted((a, b))
    assert sign_changes(form9, lo).count <= sign_changes(form9, hi).count


def test_iwaniec(form9):
    assert abs(iwaniec_check(form9, 1).max_ratio - abs(a_float(form9)[1])) < 1e-15
    r3 = iwaniec_check(form9, 1000).max_ratio
    r4 = iwaniec_check(form9, 10_000).max_ratio
    assert math.isfinite(r3) and r4 < 1.05 * r3


def test_contour_domain(form9):
    with pytest.raises(DomainError):
        contour_check(form9, 5)


def test_contour_refuses_bad_quadrature(form9, horo):
    with pytest.raises(ConvergenceError):
        contour_check(form9, 100, evaluator=horo, panel=8.0, nodes=8)


def test_export_deterministic(form9):
    rep = sign_changes(form9, 200)
    assert to_json(rep, {"a": 1}) == to_json(rep, {"a": 1})
    text = to_csv([(1, 0.5, mpmath.mpf(2))], ("x", "y", "z"), {"config_hash": "abc"})
    assert text.splitlines()[0] == "# config_hash: abc" and text.splitlines()[1] == "x,y,z"
