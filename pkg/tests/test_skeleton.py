from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import fixture_path
from reesdiag.arith import LaurentPoly
from reesdiag.cli import parse_model
from reesdiag.errors import InvariantViolation, NotASimplex, UnsupportedDimension
from reesdiag.skeleton import (
    SkeletonComplex,
    SkeletonPoint,
    _full_u,
    point_valuation,
    refine,
    subdivision_vertices,
)
from reesdiag.valuation import DivisorData, eval_valuation

seeds = st.integers(0, 10**6)


def _complex(name):
    return parse_model(fixture_path(name)).complex()


def _random_section(rng, n):
    terms = {}
    for _ in range(rng.randint(1, 4)):
        terms[(rng.randint(0, 2), tuple(rng.randint(-2, 2) for _ in range(n)))] = Fraction(rng.choice([-2, -1, 1, 3]))
    return LaurentPoly(terms, n, 8)


def _interior_point(rng, cell):
    w = [Fraction(rng.randint(1, 9)) for _ in cell.vertices]
    s = sum(w)
    w = [x / s for x in w]
    x = tuple(sum((wi * v[i] for wi, v in zip(w, cell.vertices)), Fraction(0)) for i in range(cell.dim))
    return w, x


def _value(K, simplex, x, f):
    return eval_valuation(K.valuation_at(SkeletonPoint.make(simplex, _full_u(x))), f)


def test_interval_refinement():
    K = _complex("interval")
    S = refine(K, [LaurentPoly.parse("1+x", ["x"], 8)])
    assert len(S.cells) == 2
    assert {p.coords for p in subdivision_vertices(S)} == {
        ((0, Fraction(1)),), ((0, Fraction(1, 2)), (1, Fraction(1, 2))), ((1, Fraction(1)),)}


def test_dimension_limit_and_bad_simplices():
    ds = [DivisorData(f"E{i}", (1,), 1) for i in range(5)]
    with pytest.raises(UnsupportedDimension):
        SkeletonComplex(ds, [[0, 1, 2, 3, 4]])
    K = SkeletonComplex(ds[:3], [[0, 1], [1, 2]])
    with pytest.raises(NotASimplex):
        K.check_simplex([0, 2])
    with pytest.raises(InvariantViolation):
        SkeletonComplex([DivisorData("E", (1,), 1, A=1)], [[0]])


@given(seeds)
def test_point_valuation_agrees_with_skeleton_coordinates(seed):
    rng = random.Random(seed)
    K = _complex("torus")
    alpha = [Fraction(rng.randint(0, 5)) for _ in range(3)]
    if not any(alpha):
        alpha[0] = Fraction(1)
    alpha = [a / sum(alpha) for a in alpha]
    p = K.point_from_alpha((0, 1, 2), alpha)
    assert point_valuation(K, (0, 1, 2), alpha) == K.valuation_at(p)


@pytest.mark.parametrize("name", ["interval", "torus"])
@settings(max_examples=10)
@given(seed=seeds)
def test_refinement_is_affine_on_cells(name, seed):
    """Every R-combination of the sections has an affine valuation on every cell."""
    rng = random.Random(seed)
    K = _complex(name)
    sections = [_random_section(rng, K.num_vars) for _ in range(2)]
    S = refine(K, sections)
    f = sections[0].series_mul([Fraction(rng.randint(-2, 2)), Fraction(rng.randint(-2, 2))]) + sections[1]
    if f.is_zero():
        return
    for cell in S.cells:
        at_vertices = [_value(K, cell.simplex, v, f) for v in cell.vertices]
        for _ in range(10):
            w, x = _interior_point(rng, cell)
            assert _value(K, cell.simplex, x, f) == sum(wi * a for wi, a in zip(w, at_vertices))


@settings(max_examples=10)
@given(seeds)
def test_refinement_covers_the_simplex(seed):
    rng = random.Random(seed)
    K = _complex("torus")
    S = refine(K, [_random_section(rng, 2) for _ in range(2)])
    for _ in range(10):
        x = (Fraction(rng.randint(0, 4), 8), Fraction(rng.randint(0, 4), 8))
        assert any(c.contains(x) for c in S.cells)


@settings(max_examples=10)
@given(seeds)
def test_refinement_is_monotone(seed):
    rng = random.Random(seed)
    K = _complex("torus")
    base = [_random_section(rng, 2)]
    coarse = refine(K, base)
    fine = refine(K, base + [_random_section(rng, 2)])
    assert len(fine.cells) >= len(coarse.cells)
    for cell in fine.cells:
        assert any(all(c.contains(v) for v in cell.vertices) for c in coarse.cells)


@pytest.mark.parametrize("name", ["interval", "torus"])
@settings(max_examples=10)
@given(seed=seeds)
def test_recorded_forms_match_point_valuations(name, seed):
    rng = random.Random(seed)
    K = _complex(name)
    sections = [_random_section(rng, K.num_vars) for _ in range(2)]
    S = refine(K, sections)
    for cell in S.cells:
        for i, s in enumerate(sections):
            coeffs = S.form_values(cell, i)
            for _ in range(10):
                _, x = _interior_point(rng, cell)
                u = _full_u(x)
                alpha = [ui / K.vertices[j].b for ui, j in zip(u, cell.simplex)]
                alpha = [a / sum(alpha) for a in alpha]
                direct = eval_valuation(point_valuation(K, cell.simplex, alpha), s)
                assert sum(c * ui for c, ui in zip(coeffs, u)) == direct
