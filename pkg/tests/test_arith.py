from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reesdiag.arith import AbovePrecision, LaurentPoly, TruncatedSeries, format_frac, frac, ord_t
from reesdiag.errors import ParseError

N = 6
coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)
series = st.lists(coeff, min_size=N, max_size=N).map(lambda cs: TruncatedSeries(cs, N))
units = series.filter(lambda s: s[0] != 0)


def test_format_frac_integers_have_no_denominator():
    assert format_frac(Fraction(3)) == "3"
    assert format_frac(Fraction(-2, 4)) == "-1/2"


def test_frac_accepts_strings_and_rejects_floats():
    assert frac("3/6") == Fraction(1, 2)
    with pytest.raises((TypeError, ValueError)):
        frac(0.5)


@given(series, series, series)
def test_series_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(units)
def test_unit_inverse(u):
    assert u * u.inverse() == TruncatedSeries.one(N)


@given(series, st.integers(0, N))
def test_ord_t_of_shift(s, k):
    shifted = s.shift(k)
    o = ord_t(s)
    if isinstance(o, AbovePrecision) or o + k >= N:
        assert isinstance(ord_t(shifted), AbovePrecision)
    else:
        assert ord_t(shifted) == o + k


def test_parse_and_print_round_trip():
    f = LaurentPoly.parse("2*x^-1*y + t^2*x - 1/3", ["x", "y"], 5)
    assert f.coefficient(0, (-1, 1)) == 2
    assert f.coefficient(2, (1, 0)) == 1
    assert f.coefficient(0, (0, 0)) == Fraction(-1, 3)
    g = LaurentPoly.parse(f.to_string(["x", "y"]), ["x", "y"], 5)
    assert g == f


def test_terms_beyond_precision_are_dropped():
    f = LaurentPoly.parse("x + t^3*y", ["x", "y"], 3)
    assert f.support() == {(1, 0)}


@pytest.mark.parametrize("text", ["x +", "sin(x)", "z", "x^(1/2)"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        LaurentPoly.parse(text, ["x"], 4)


laurent = st.dictionaries(
    st.tuples(st.integers(0, 3), st.tuples(st.integers(-2, 2), st.integers(-2, 2))),
    coeff.filter(bool),
    max_size=4,
).map(lambda d: LaurentPoly(d, 2, 6))


@given(laurent, laurent)
def test_laurent_product_commutes_and_respects_support(f, g):
    h = f * g
    assert h == g * f
    for (k, beta) in h.terms:
        assert k < 6


@given(laurent)
def test_t_shift_moves_degrees(f):
    g = f.t_shift(1)
    assert all(k >= 1 for k, _ in g.terms)
    assert len(g.terms) <= len(f.terms)
