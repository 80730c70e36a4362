"""Field axioms and canonical forms for the exact coefficient ring."""

from fractions import Fraction

import pytest
from hypothesis import given
import hypothesis.strategies as st

from kdvkit.scalars import I, MINUS_ONE, ONE, SQRT2, Scalar, TWO, ZERO, rat

frac = st.fractions(min_value=-40, max_value=40, max_denominator=12)


def scalars():
    return st.builds(Scalar, frac, frac, frac, frac)


@given(scalars(), scalars(), scalars())
def test_ring_axioms(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert x + y == y + x
    assert (x * y) * z == x * (y * z)
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert x + ZERO == x
    assert x * ONE == x
    assert x + (-x) == ZERO


@given(scalars())
def test_inverse(x):
    if x.is_zero():
        with pytest.raises(ZeroDivisionError):
            x.inverse()
    else:
        assert x * x.inverse() == ONE


def test_unit_relations():
    assert SQRT2 * SQRT2 == TWO
    assert I * I == MINUS_ONE
    assert (I * SQRT2) ** 2 == Scalar.of(-2)


@given(scalars(), scalars())
def test_conjugations_are_morphisms(x, y):
    assert (x * y).conj_i() == x.conj_i() * y.conj_i()
    assert (x + y).conj_sqrt2() == x.conj_sqrt2() + y.conj_sqrt2()
    assert x.conj_i().conj_i() == x


@given(scalars())
def test_complex_embedding(x):
    z = x.to_complex()
    w = (x * x).to_complex()
    assert abs(z * z - w) < 1e-9 * (1 + abs(w))


def test_to_float_rejects_imaginary():
    with pytest.raises(ValueError):
        I.to_float()
    assert SQRT2.to_float() == pytest.approx(2 ** 0.5)


@given(scalars())
def test_json_round_trip(x):
    assert Scalar.from_json(x.json_obj()) == x


def test_text_forms():
    assert rat(1, 4).text() == "1/4"
    assert rat(-3, 2).text() == "-3/2"
    assert ZERO.text() == "0"
    assert I.text() == "I"
    assert (rat(2) * SQRT2).text() == "2*sqrt2"
    combo = ONE + SQRT2
    assert "sqrt2" in combo.text() and combo.text().startswith("(")


def test_power_negative():
    x = Scalar.of(Fraction(3, 2))
    assert x ** -2 == Scalar.of(Fraction(4, 9))
    y = ONE + I
    assert y ** -1 == y.inverse()
    assert (SQRT2 + I) * (SQRT2 + I) ** -1 == ONE
