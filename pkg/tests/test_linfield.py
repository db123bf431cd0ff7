from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gen import random_field_filtration
from reesdiag.errors import DimensionMismatch, NotABasis, NotDiagonalizing, Obstruction
from reesdiag.linfield import (
    PLUS_INFINITY,
    FieldFiltration,
    Subspace,
    diagonalize_field,
    graded_table,
    jump_multiset,
    nullspace,
    ord_filtration,
    rref,
    verify_diagonalizes,
)

small = st.integers(-3, 3).map(Fraction)


@st.composite
def matrices(draw, max_rows=4, max_cols=4):
    m = draw(st.integers(1, max_rows))
    n = draw(st.integers(1, max_cols))
    return n, [draw(st.lists(small, min_size=n, max_size=n)) for _ in range(m)]


@given(matrices())
def test_nullspace_is_annihilated_and_rank_nullity(data):
    n, rows = data
    red, pivots = rref(rows, n)
    kernel = nullspace(rows, n)
    assert len(red) + len(kernel) == n
    for v in kernel:
        for r in rows:
            assert sum(a * b for a, b in zip(r, v)) == 0


@given(matrices(), matrices())
def test_subspace_modular_law(a, b):
    n = a[0]
    U = Subspace.span(a[1], n)
    W = Subspace.span([r[:n] + [Fraction(0)] * (n - len(r)) for r in b[1]], n)
    assert (U + W).dim + (U & W).dim == U.dim + W.dim
    assert (U & W).issubspace(U) and U.issubspace(U + W)


def test_filtration_rejects_increasing_steps():
    with pytest.raises(ValueError):
        FieldFiltration.flag(2, [(1, [(1, 0)]), (2, [(1, 0), (0, 1)])])


def test_filtration_dimension_mismatch():
    F = FieldFiltration.flag(2, [(1, [(1, 0)])])
    G = FieldFiltration.flag(3, [(1, [(1, 0, 0)])])
    with pytest.raises(DimensionMismatch):
        graded_table([F, G])


def test_ord_is_max_step_containing_vector():
    F = FieldFiltration.flag(2, [(3, [(1, 0)])])
    assert ord_filtration(F, (1, 0)) == 3
    assert ord_filtration(F, (1, 1)) == 0
    assert ord_filtration(F, (0, 0)) is PLUS_INFINITY


def test_graded_table_of_single_flag_is_jump_multiset():
    F = FieldFiltration.from_basis([(1, 0, 0), (1, 1, 0), (0, 1, 1)], [0, 2, Fraction(5, 2)])
    table = graded_table([F])
    assert table.dims() == {(0,): 1, (2,): 1, (Fraction(5, 2),): 1}


@given(st.integers(0, 10**6), st.integers(1, 5))
def test_two_filtrations_always_split(seed, n):
    rng = random.Random(seed)
    Fs = [random_field_filtration(rng, n), random_field_filtration(rng, n)]
    basis = diagonalize_field(Fs, seed=seed)
    assert verify_diagonalizes(basis.vectors, Fs)
    jumps = jump_multiset(basis.vectors, Fs)
    assert Counter(basis.ord_vectors) == jumps
    assert graded_table(Fs).total == n


def test_obstruction_carries_table():
    lines = [FieldFiltration.flag(2, [(1, [v])]) for v in [(1, 0), (0, 1), (1, 1)]]
    with pytest.raises(Obstruction) as info:
        diagonalize_field(lines)
    assert info.value.rank == 2
    assert info.value.table.dims() == {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1}


def test_verify_rejects_non_basis_and_bad_basis():
    F = FieldFiltration.flag(2, [(1, [(1, 1)])])
    with pytest.raises(NotABasis):
        verify_diagonalizes([(1, 0), (2, 0)], [F])
    assert not verify_diagonalizes([(1, 0), (0, 1)], [F])
    with pytest.raises(NotDiagonalizing):
        jump_multiset([(1, 0), (0, 1)], [F])


def test_seed_changes_representatives_not_jumps():
    rng = random.Random(9)
    Fs = [random_field_filtration(rng, 4) for _ in range(2)]
    a = diagonalize_field(Fs, seed=1)
    b = diagonalize_field(Fs, seed=2)
    assert Counter(a.ord_vectors) == Counter(b.ord_vectors)
