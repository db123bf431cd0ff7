"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run directly with ``python tests/test_acceptance.py`` or through pytest; the
summary lines are repeated at the end of the pytest report.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import pytest

from gen import fixture_path, random_field_filtration, random_orders, random_unimodular
from oracles import elementary_divisors, plane_flags_diagonalizable
from reesdiag.arith import LaurentPoly
from reesdiag.cli import parse_model
from reesdiag.errors import Obstruction
from reesdiag.linfield import FieldFiltration, diagonalize_field, graded_table, verify_diagonalizes
from reesdiag.lindvr import (
    DvrFiltration,
    diagonalize_dvr,
    diagonalize_mod,
    lift_chain,
    rees_quotient_check,
    verify_mod,
)
from reesdiag.skeleton import point_valuation
from reesdiag.theta import (
    check_independence,
    cone_assemble,
    cone_basis,
    cone_extract,
    construct_basis,
    extend_basis,
    gr_ring_check,
    tropicalize,
    trop_multiset_equivalent,
    vertex_filtrations,
)
from reesdiag.valuation import eval_valuation

SHIPPED = ("interval", "sheared", "torus", "triangle")


def _line(v):
    return FieldFiltration.flag(2, [(1, [v])])


def test_three_lines_obstruction(acceptance):
    start = time.perf_counter()
    Fs = [_line((1, 0)), _line((0, 1)), _line((1, 1))]
    total = graded_table(Fs).total
    with pytest.raises(Obstruction) as info:
        diagonalize_field(Fs)
    elapsed = time.perf_counter() - start
    ok = total == 3 and info.value.table.total == 3 and elapsed < 1
    acceptance(1, "three-lines obstruction", ok, elapsed, 1, f"graded total {total}")
    assert ok


def _random_plane_flag(rng):
    base = Fraction(rng.randint(-2, 1))
    if rng.random() < 0.15:
        return FieldFiltration.flag(2, [], base), None
    v = rng.choice([(1, 0), (0, 1), (1, 1), (2, 2), (1, -1), (1, 2), (-2, -4), (3, 1)])
    lam = base + Fraction(rng.randint(1, 6), rng.choice([1, 2, 3]))
    return FieldFiltration.flag(2, [(lam, [v])], base), v


def test_plane_flag_classification(acceptance):
    rng = random.Random(2)
    start = time.perf_counter()
    agree = 0
    for _ in range(500):
        pairs = [_random_plane_flag(rng) for _ in range(rng.choice([3, 4]))]
        expected = plane_flags_diagonalizable([v for _, v in pairs])
        try:
            diagonalize_field([F for F, _ in pairs])
            got = True
        except Obstruction:
            got = False
        agree += got == expected
    elapsed = time.perf_counter() - start
    ok = agree == 500 and elapsed < 10
    acceptance(2, "plane flag classification", ok, elapsed, 10, f"{agree}/500 agree")
    assert ok


def test_two_filtrations_always_split(acceptance):
    rng = random.Random(3)
    start = time.perf_counter()
    good = 0
    for _ in range(200):
        n = rng.randint(1, 5)
        Fs = [random_field_filtration(rng, n), random_field_filtration(rng, n)]
        basis = diagonalize_field(Fs, seed=rng.randint(0, 10**6))
        good += verify_diagonalizes(basis.vectors, Fs)
    elapsed = time.perf_counter() - start
    ok = good == 200 and elapsed < 30
    acceptance(3, "two filtrations over a field", ok, elapsed, 30, f"{good}/200 verified")
    assert ok


def test_single_dvr_filtration_matches_smith_form(acceptance):
    N = 8
    rng = random.Random(4)
    start = time.perf_counter()
    good = 0
    for trial in range(100):
        n = rng.randint(1, 4)
        d = rng.choice([1, 1, 2, 3])
        cols = random_unimodular(rng, n, N)
        orders = random_orders(rng, n, d)
        F = DvrFiltration.from_basis(cols, orders, precision=N)
        got = [o[0] for o in diagonalize_dvr([F], seed=trial).ord_vectors]
        probes = sorted(set(orders) | {o + 1 for o in orders} | {o + Fraction(1, d) for o in orders})
        match = True
        for lam in probes:
            # generators t^ceil(lam - o) * column of the step, fed to the independent SNF
            gens = [[([Fraction(0)] * max(0, math.ceil(lam - o)) + p)[:N] for p in col] for col, o in zip(cols, orders)]
            expected = elementary_divisors(gens, n, N)
            if expected != sorted(max(0, math.ceil(lam - o)) for o in got):
                match = False
                break
        good += match
    elapsed = time.perf_counter() - start
    ok = good == 100 and elapsed < 60
    acceptance(4, "single DVR filtration vs Smith form", ok, elapsed, 60, f"{good}/100 match")
    assert ok


def test_rees_quotient_identity(acceptance):
    N = 8
    rng = random.Random(5)
    start = time.perf_counter()
    good = 0
    for _ in range(50):
        n, r, d = rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)
        Fs = [DvrFiltration.from_basis(random_unimodular(rng, n, N), random_orders(rng, n, d, 2), precision=N)
              for _ in range(r)]
        good += rees_quotient_check(Fs)
    elapsed = time.perf_counter() - start
    ok = good == 50
    acceptance(5, "Rees quotient equals graded table", ok, elapsed, None, f"{good}/50 families")
    assert ok


def test_lift_chain_on_sheared_fixture(acceptance):
    model = parse_model(fixture_path("sheared"))
    K = model.complex()
    V = model.space(0)
    _, Fs = vertex_filtrations(V, K)
    start = time.perf_counter()
    lifted = lift_chain(lambda i: diagonalize_mod(Fs, i, seed=17 * i), 8)
    checks = [verify_mod([tuple(p[:i] for p in v) for v in lifted.vectors], Fs, i) for i in range(1, 9)]
    elapsed = time.perf_counter() - start
    ok = all(checks) and elapsed < 5
    acceptance(6, "lifting to t^8 on the sheared fixture", ok, elapsed, 5, f"levels verified {sum(checks)}/8")
    assert ok


def _random_section(rng, num_vars):
    terms = {}
    for _ in range(rng.randint(1, 5)):
        key = (rng.randint(0, 3), tuple(rng.randint(-3, 3) for _ in range(num_vars)))
        terms[key] = Fraction(rng.choice([-3, -2, -1, 1, 2, 5]), rng.randint(1, 3))
    return LaurentPoly(terms, num_vars, 8)


def _random_barycentric(rng, k):
    while True:
        raw = [rng.randint(0, 6) for _ in range(k)]
        if sum(raw):
            return [Fraction(x, sum(raw)) for x in raw]


def test_tropicalization_exact(acceptance):
    rng = random.Random(7)
    start = time.perf_counter()
    checked = mismatches = 0
    for name in ("interval", "torus"):
        K = parse_model(fixture_path(name)).complex()
        for _ in range(20):
            s = _random_section(rng, K.num_vars)
            trop = tropicalize(s, K)
            for _ in range(100):
                simplex = rng.choice(K.maximal)
                alpha = _random_barycentric(rng, len(simplex))
                direct = eval_valuation(point_valuation(K, simplex, alpha), s)
                checked += 1
                mismatches += trop(K.point_from_alpha(simplex, alpha)) != direct
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and checked == 4000
    acceptance(7, "tropicalization vs direct evaluation", ok, elapsed, None, f"{checked - mismatches}/{checked} exact")
    assert ok


def _is_monomial(s: LaurentPoly) -> bool:
    return len(s.terms) == 1


def test_torus_round_trip_and_counterexample(acceptance):
    start = time.perf_counter()
    torus = parse_model(fixture_path("torus"))
    K = torus.complex()
    theta = construct_basis(torus.space(3), K)
    exponents = sorted(next(iter(s.terms))[1] for s in theta.sections)
    monomial_ok = all(_is_monomial(s) for s in theta.sections) and exponents == sorted(
        [(0, 0), (1, 0), (0, 1), (-1, -1)])
    certified = check_independence(theta.sections, K).independent
    interval = parse_model(fixture_path("interval"))
    verdict = check_independence(interval.levels[1], interval.complex())
    rejected = not verdict.independent and verdict.counterexample is not None
    where = str(verdict.counterexample.point) if rejected else "none"
    elapsed = time.perf_counter() - start
    ok = monomial_ok and certified and rejected
    acceptance(8, "torus monomials certified; 1+x, 1-x rejected", ok, elapsed, None, f"counterexample at {where}")
    assert ok


def test_tropical_functions_independent_of_seed(acceptance):
    start = time.perf_counter()
    model = parse_model(fixture_path("interval"))
    K = model.complex()
    V = model.space(2)
    a = construct_basis(V, K, seed=1)
    b = construct_basis(V, K, seed=2)
    same = trop_multiset_equivalent([tropicalize(s, K) for s in a.sections], [tropicalize(s, K) for s in b.sections])
    distinct = a.sections != b.sections
    elapsed = time.perf_counter() - start
    ok = same
    acceptance(9, "trop multiset independent of seed", ok, elapsed, None,
               "bases differ" if distinct else "seeds produced the same basis")
    assert ok


def test_vertical_shift_invariance(acceptance):
    rng = random.Random(10)
    start = time.perf_counter()
    changed = 0
    checked = 0
    for name in SHIPPED:
        model = parse_model(fixture_path(name))
        K = model.complex()
        baseline = [check_independence(lv, K).independent for lv in model.levels]
        for _ in range(20):
            shift = {d.label: rng.randint(-4, 4) for d in model.divisors}
            m = rng.randrange(len(model.levels))
            checked += 1
            changed += check_independence(model.levels[m], K, shift).independent != baseline[m]
    elapsed = time.perf_counter() - start
    ok = changed == 0
    acceptance(10, "verdicts invariant under vertical shifts", ok, elapsed, None, f"{checked - changed}/{checked} unchanged")
    assert ok


def test_cone_grading(acceptance):
    start = time.perf_counter()
    model = parse_model(fixture_path("torus"))
    K = model.complex()
    levels = [model.space(i) for i in range(3)]
    cone = cone_assemble(levels)
    theta = cone_basis(cone, K, seed=0)
    rng = random.Random(11)
    probes = list(theta.sections)
    for _ in range(10):
        picks = rng.sample(theta.sections, rng.randint(1, len(theta.sections)))
        f = picks[0]
        for g in picks[1:]:
            f = f + g
        probes.append(f)
    formulas_ok = True
    for f in probes:
        z_degrees = {beta[-1] for (_, beta), c in f.terms.items() if c}
        formulas_ok &= cone.ord_0(f) == min(z_degrees) and cone.ord_D(f) == -max(z_degrees)
    extracts_ok = True
    for m in range(3):
        part = cone_extract(theta, m, cone, K)
        extracts_ok &= len(part.sections) == levels[m].rank and check_independence(part.sections, K).independent
    elapsed = time.perf_counter() - start
    ok = formulas_ok and extracts_ok
    acceptance(11, "cone grading and extraction", ok, elapsed, None,
               f"{len(theta.sections)} homogeneous sections over 3 levels")
    assert ok


def test_nested_extension(acceptance):
    start = time.perf_counter()
    model = parse_model(fixture_path("torus"))
    K = model.complex()
    chain = [construct_basis(model.space(0), K, seed=0)]
    for m in range(1, 4):
        chain.append(extend_basis(chain[-1], model.space(m), K, seed=m))
    verbatim = all(outer.sections[:len(inner.sections)] == inner.sections for inner, outer in zip(chain, chain[1:]))
    certified = all(check_independence(b.sections, K).independent for b in chain)
    families = {m: model.space(m) for m in range(4)}
    points, _ = vertex_filtrations(model.space(3), K)
    vals = [K.valuation_at(p) for p in points]
    one = LaurentPoly.parse("1", model.variables, model.precision)
    # inclusion into the next level: multiplication by 1 raising the level index
    samples = [(m, s) for m, b in enumerate(chain[:3]) for s in b.sections]
    report = gr_ring_check(families, vals, (1, one), samples)
    elapsed = time.perf_counter() - start
    ok = verbatim and certified and report.injective
    acceptance(12, "nested extension over the 4-level tower", ok, elapsed, None,
               f"verbatim={verbatim} gr-injective={report.injective}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
