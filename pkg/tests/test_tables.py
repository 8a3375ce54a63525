from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halfsign.context import ValidationError
from halfsign.lift import LiftCoefficients
from halfsign.qspace import HalfIntegralForm
from halfsign.tables import dumps_form, dumps_lift, load_form, loads_form, loads_lift, save_form


def test_form_roundtrip_bit_exact(form9, tmp_path):
    path = tmp_path / "f.txt"
    save_form(form9, path)
    back = load_form(path)
    assert back.c == form9.c and back.eigenvalues == form9.eigenvalues and back.coords == form9.coords
    assert dumps_form(back) == path.read_text()


@settings(max_examples=30)
@given(st.lists(st.integers(-(10**30), 10**30), min_size=2, max_size=40), st.integers(1, 10**6))
def test_form_roundtrip_property(c, scale):
    f = HalfIntegralForm(9, len(c) - 1, [0] + c[1:], [Fraction(1, 3), -2], {3: Fraction(-7, 2)}, scale)
    g = loads_form(dumps_form(f))
    assert (g.c, g.coords, g.eigenvalues, g.scale) == (f.c, f.coords, f.eigenvalues, f.scale)


def test_lift_roundtrip(lift9):
    back = loads_lift(dumps_lift(lift9))
    assert back.A == lift9.A and back.eigenvalues == lift9.eigenvalues
    rational = LiftCoefficients(9, 2, [0, 1, Fraction(-8, 3)])
    assert loads_lift(dumps_lift(rational)).A == rational.A


def test_tampering_detected(form9):
    text = dumps_form(form9)
    with pytest.raises(ValidationError, match="checksum"):
        loads_form(text.replace("\n2 -6\n", "\n2 -5\n"))
    with pytest.raises(ValidationError):
        loads_form(text[: len(text) // 2])


def test_kind_mismatch(lift9):
    with pytest.raises(ValidationError, match="expected a form"):
        loads_form(dumps_lift(lift9))
