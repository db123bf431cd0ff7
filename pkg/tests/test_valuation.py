from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reesdiag.arith import LaurentPoly
from reesdiag.errors import IncidenceViolation, InvariantViolation, NotIndependent, PrecisionExhausted
from reesdiag.valuation import (
    DivisorData,
    MonomialValuation,
    SectionSpace,
    eval_valuation,
    filtration_step,
    induced_filtration_single,
    log_discrepancy_on_cone,
    metric_shift,
    section_ord,
    skeleton_membership,
    vertical_shift,
)

coeff = st.fractions(min_value=-4, max_value=4, max_denominator=3).filter(bool)
polys = st.dictionaries(
    st.tuples(st.integers(0, 2), st.tuples(st.integers(-2, 2), st.integers(-2, 2))), coeff, min_size=1, max_size=4,
).map(lambda d: LaurentPoly(d, 2, 12))
weights = st.tuples(st.fractions(-2, 2, max_denominator=3), st.fractions(-2, 2, max_denominator=3))


def _p(text, variables=("x",), precision=8):
    return LaurentPoly.parse(text, list(variables), precision)


@given(weights, polys, polys)
def test_monomial_valuation_axioms(w, f, g):
    v = MonomialValuation(w)
    assert v(f * g) == v(f) + v(g)
    s = f + g
    if not s.is_zero():
        assert v(s) >= min(v(f), v(g))


def test_normalized_so_that_t_has_value_one():
    v = MonomialValuation((Fraction(1, 3),))
    assert v(_p("t")) == 1
    assert v(_p("t*x^2")) == Fraction(5, 3)


def test_divisor_data_validation_names_label():
    with pytest.raises(InvariantViolation, match="E7"):
        DivisorData("E7", (1,), b=-1)
    with pytest.raises(InvariantViolation, match="F"):
        DivisorData("F", (1,), b=1, A=-1)
    assert DivisorData("E", (2, 4), b=2).valuation().weights == (1, 2)


def test_log_discrepancy_and_membership():
    ds = [DivisorData("E0", (1,), 1), DivisorData("E1", (-1,), 2, A=1)]
    assert log_discrepancy_on_cone(ds, [1, 2]) == 2
    assert skeleton_membership(ds, [1, 0])
    assert not skeleton_membership(ds, [Fraction(1, 2), Fraction(1, 4)])
    with pytest.raises(IncidenceViolation):
        log_discrepancy_on_cone(ds, [1, 1], simplices=[[0], [1]])


def test_vertical_shift_is_linear_and_normalized():
    ds = [DivisorData("E0", (-1,), 2), DivisorData("E1", (1,), 2)]
    assert vertical_shift(ds, [Fraction(1, 2), 0], {"E0": 3}) == Fraction(3, 2)
    assert vertical_shift(ds, [Fraction(1, 4), Fraction(1, 4)], {"E0": 2, "E1": 4}) == Fraction(3, 2)
    shifted = metric_shift({"p": Fraction(1)}, {"p": [Fraction(1, 2), 0]}, ds, {"E0": 2})
    assert shifted == {"p": 2}


def test_section_space_rejects_dependence():
    with pytest.raises(NotIndependent):
        SectionSpace([_p("x"), _p("2*x")])
    with pytest.raises(NotIndependent):
        SectionSpace([_p("1"), _p("x"), _p("x^2"), _p("1+x^2")])
    # independent over R although the residues are dependent
    V = SectionSpace([_p("x"), _p("x+t")])
    assert V.rank == 2


@given(st.lists(st.integers(-2, 2), min_size=2, max_size=2), st.integers(0, 3))
def test_coordinates_round_trip(coeffs, k):
    V = SectionSpace([_p("1+x"), _p("x"), _p("t+x^-1")])
    vec = [tuple(Fraction(c) for c in [0] * k + [coeffs[0]]), (Fraction(coeffs[1]),), ()]
    f = V.combination(vec)
    if f.is_zero():
        return
    assert V.combination(V.coordinates(f)) == f


def test_coordinates_outside_span():
    V = SectionSpace([_p("1"), _p("x")])
    with pytest.raises(NotIndependent):
        V.coordinates(_p("x^2"))


def test_induced_filtration_orders():
    V = SectionSpace([_p("1"), _p("x")])
    v = DivisorData("E", (1,), 2).valuation()
    F = induced_filtration_single(v, V)
    assert section_ord(F, V, _p("1")) == 0
    assert section_ord(F, V, _p("x")) == Fraction(1, 2)
    assert section_ord(F, V, _p("t*x")) == Fraction(3, 2)
    G = induced_filtration_single(v, V, offset=2)
    assert section_ord(G, V, _p("x")) == Fraction(5, 2)


def test_induced_filtration_detects_t_divisible_combination():
    V = SectionSpace([_p("x"), _p("x+t")])
    F = induced_filtration_single(MonomialValuation((0,)), V)
    assert F.ord([(Fraction(-1),), (Fraction(1),)]) == 1


@given(weights, st.integers(0, 3))
def test_filtration_step_matches_direct_valuation(w, lam):
    v = MonomialValuation(w)
    V = SectionSpace([_p("1+x*y", ("x", "y"), 10), _p("x-y^-1", ("x", "y"), 10)])
    M = filtration_step(v, V, lam)
    for a in [((1,), ()), ((), (1,)), ((1,), (1,)), ((0, 1), (1,))]:
        f = V.combination(a)
        assert M.contains(a) == (eval_valuation(v, f) >= lam)


def test_filtration_step_precision_guard():
    V = SectionSpace([_p("1", precision=2)])
    with pytest.raises(PrecisionExhausted):
        filtration_step(MonomialValuation((0,)), V, 5)
