"""
Tropicalization, certification and construction of valuatively independent bases.

Certification reduces to finitely many valuations: after :func:`refine`,
every element of the R-span of the sections is affine on each cell, so the
identity ``v(sum a_i theta_i) = min v(a_i theta_i)`` holds on a cell once it
holds at the cell's vertices.  At a vertex the identity is exactly "the
coordinate basis diagonalizes the induced filtration".
"""

from __future__ import annotations

import itertools
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .arith import LaurentPoly, frac
from .errors import (
    InvalidFiltration,
    InvariantViolation,
    NestingViolated,
    NotGradedBasis,
    NotIndependent,
    NotWeightCompatible,
    Obstruction,
)
from .lindvr import (
    DvrFiltration,
    DvrGradedTable,
    PolyVec,
    Submodule,
    as_polyvec,
    diagonalize_dvr,
    dvr_graded_table,
    graded_quotient,
    verify_diagonalizes_dvr,
)
from .skeleton import (
    Cell,
    SkeletonComplex,
    SkeletonPoint,
    Subdivision,
    _full_u,
    pairwise_refine,
    refine,
    subdivision_vertices,
)
from .valuation import (
    DivisorData,
    MonomialValuation,
    SectionSpace,
    eval_valuation,
    induced_filtration_single,
    vertical_shift,
)

log = logging.getLogger(__name__)
_ZERO = Fraction(0)


# -- tropical functions --------------------------------------------------------


@dataclass(frozen=True)
class TropicalFunction:
    """Piecewise-affine ``v -> v(s)`` on a skeleton, one active term per cell."""

    complex: SkeletonComplex = field(repr=False, compare=False)
    terms: tuple = ()
    cells: tuple[Cell, ...] = ()

    def cell_forms(self):
        """``(cell, values of its affine form at the simplex vertices)`` pairs."""
        return [(c, self.complex.term_coefficients(c.simplex, c.forms[0])) for c in self.cells]

    def __call__(self, point: SkeletonPoint) -> Fraction:
        for cell in self.cells:
            if not set(point.support()) <= set(cell.simplex):
                continue
            x = point.u(cell.simplex)[1:]
            if cell.contains(x):
                coeffs = self.complex.term_coefficients(cell.simplex, cell.forms[0])
                return sum((c * u for c, u in zip(coeffs, _full_u(x))), _ZERO)
        raise ValueError(f"{point} is not on the skeleton")

    def shifted_difference(self, other: TropicalFunction) -> Fraction | None:
        """The constant ``self - other`` if it is constant on the whole skeleton, else None."""
        cells = pairwise_refine(self.complex, list(self.terms) + list(other.terms))
        diff = None
        for cell in cells:
            for pt in cell.points():
                d = self(pt) - other(pt)
                if diff is None:
                    diff = d
                elif d != diff:
                    return None
        return diff

    def equivalent(self, other: TropicalFunction) -> bool:
        """Equal up to adding a constant integer."""
        d = self.shifted_difference(other)
        return d is not None and d.denominator == 1


def tropicalize(s: LaurentPoly, K: SkeletonComplex) -> TropicalFunction:
    if s.is_zero():
        raise ValueError("the zero section has no tropicalization")
    terms = tuple(sorted(s.terms))
    return TropicalFunction(K, terms, tuple(pairwise_refine(K, terms)))


def trop_multiset_equivalent(fs: Sequence[TropicalFunction], gs: Sequence[TropicalFunction]) -> bool:
    """Equal multisets up to reordering and per-function integer shifts."""
    if len(fs) != len(gs):
        return False
    unused = list(gs)
    for f in fs:
        match = next((g for g in unused if f.equivalent(g)), None)
        if match is None:
            return False
        unused.remove(match)
    return True


# -- certification -------------------------------------------------------------


@dataclass(frozen=True)
class VertexRecord:
    point: SkeletonPoint
    valuation: MonomialValuation
    orders: tuple[Fraction, ...]
    diagonal: bool


@dataclass(frozen=True)
class ThetaBasis:
    sections: tuple[LaurentPoly, ...]
    ord_vectors: tuple[dict, ...]
    certificate: tuple[VertexRecord, ...]
    tags: tuple | None = None

    @property
    def points(self) -> list[SkeletonPoint]:
        return [r.point for r in self.certificate]


@dataclass(frozen=True)
class Counterexample:
    point: SkeletonPoint
    valuation: MonomialValuation
    filtration: DvrFiltration
    orders: tuple[Fraction, ...]
    jumps: tuple[Fraction, ...]


@dataclass(frozen=True)
class Verdict:
    independent: bool
    basis: ThetaBasis | None = None
    counterexample: Counterexample | None = None
    records: tuple[VertexRecord, ...] = ()


def _point_offsets(K: SkeletonComplex, points: Sequence[SkeletonPoint], shift: Mapping[str, int] | None):
    if not shift:
        return [_ZERO] * len(points)
    return [vertical_shift(K.vertices, K.alpha_of(p), shift) for p in points]


def vertex_filtrations(V: SectionSpace, K: SkeletonComplex, shift: Mapping[str, int] | None = None):
    """Subdivision vertices and the filtrations the valuations there induce on ``V``."""
    points = subdivision_vertices(refine(K, V.sections))
    offsets = _point_offsets(K, points, shift)
    Fs = [induced_filtration_single(K.valuation_at(p), V, o) for p, o in zip(points, offsets)]
    return points, Fs


def _unit_vectors(n: int) -> list[PolyVec]:
    return [tuple((Fraction(1),) if i == j else () for j in range(n)) for i in range(n)]


def check_independence(basis: Sequence[LaurentPoly], K: SkeletonComplex,
                       shift: Mapping[str, int] | None = None) -> Verdict:
    """Decide valuative independence of ``basis`` on the whole skeleton.

    ``shift`` optionally moves every valuation by an integer vertical
    divisor (label -> coefficient); the verdict must not depend on it.
    """
    V = SectionSpace(basis)
    points, Fs = vertex_filtrations(V, K, shift)
    units = _unit_vectors(V.rank)
    records = []
    bad = None
    for p, F in zip(points, Fs):
        orders = tuple(F.ord(e) for e in units)
        ok = verify_diagonalizes_dvr(units, [F])
        records.append(VertexRecord(p, K.valuation_at(p), orders, ok))
        if not ok and bad is None:
            jumps = []
            for lam, entry in sorted(dvr_graded_table([F]).entries.items()):
                jumps.extend([lam[0]] * entry.dim)
            bad = Counterexample(p, K.valuation_at(p), F, orders, tuple(jumps))
    if bad is not None:
        return Verdict(False, None, bad, tuple(records))
    ords = tuple({r.point: r.orders[i] for r in records} for i in range(V.rank))
    return Verdict(True, ThetaBasis(tuple(basis), ords, tuple(records)), None, tuple(records))


def _certify(sections: Sequence[LaurentPoly], K: SkeletonComplex, tags=None) -> ThetaBasis:
    verdict = check_independence(sections, K)
    if not verdict.independent:
        raise InvariantViolation(f"constructed basis failed certification at {verdict.counterexample.point}")
    b = verdict.basis
    return ThetaBasis(b.sections, b.ord_vectors, b.certificate, tags)


def construct_basis(V: SectionSpace, K: SkeletonComplex, seed: int | None = None) -> ThetaBasis:
    """Valuatively independent basis of ``V``; raises :class:`Obstruction` otherwise."""
    _, Fs = vertex_filtrations(V, K)
    diag = diagonalize_dvr(Fs, seed)
    sections = [V.combination(vec) for vec in diag.vectors]
    return _certify(sections, K)


# -- nesting -------------------------------------------------------------------


def _independent_mod(vectors: Sequence[PolyVec], denom: Submodule) -> bool:
    acc = denom
    for v in vectors:
        if acc.contains(v):
            return False
        acc = acc + Submodule.from_generators([v], denom.rank, max(acc.level, 1))
    return True


def extend_basis(inner: ThetaBasis, Vm: SectionSpace, K: SkeletonComplex, seed: int | None = None) -> ThetaBasis:
    """Certified basis of ``Vm`` that contains the sections of ``inner`` verbatim."""
    points, Fs = vertex_filtrations(Vm, K)
    table = dvr_graded_table(Fs, seed)
    if table.total != Vm.rank:
        raise Obstruction(table, Vm.rank)
    inner_coords = [Vm.coordinates(s) for s in inner.sections]
    by_degree: dict[tuple, list[PolyVec]] = {}
    for c in inner_coords:
        lam = tuple(F.ord(c) for F in Fs)
        by_degree.setdefault(lam, []).append(c)
    added: list[PolyVec] = []
    for lam in sorted(set(by_degree) | set(table.entries)):
        top, denom = graded_quotient(Fs, lam)
        mine = by_degree.get(lam, [])
        if mine and lam not in table.entries:
            raise NestingViolated(f"inner sections have no graded class at {lam}")
        if not _independent_mod(mine, denom):
            raise NestingViolated(f"graded classes of the inner basis are dependent at {lam}")
        acc = denom
        for c in mine:
            acc = acc + Submodule.from_generators([c], Vm.rank, max(acc.level, 1))
        for rep in table.entries.get(lam, ()).representatives if lam in table.entries else ():
            if not acc.contains(rep):
                added.append(rep)
                acc = acc + Submodule.from_generators([rep], Vm.rank, max(acc.level, 1))
    vectors = inner_coords + added
    if len(vectors) != Vm.rank or not verify_diagonalizes_dvr(vectors, Fs):
        raise NestingViolated("inner basis does not extend to a diagonalizing basis")
    sections = list(inner.sections) + [Vm.combination(v) for v in added]
    return _certify(sections, K)


# -- weight blocks -------------------------------------------------------------


def equivariant_diagonalize(V: SectionSpace, tags: Sequence, Fs: Sequence[DvrFiltration],
                            seed: int | None = None) -> ThetaBasis:
    """Diagonalize blockwise over the weight decomposition given by ``tags``.

    Each block is spanned by the coordinate sections carrying one tag; every
    filtration step must split as the direct sum of its blocks.
    """
    if len(tags) != V.rank:
        raise ValueError("one tag per section is required")
    blocks: dict = {}
    for i, tag in enumerate(tags):
        blocks.setdefault(tag, []).append(i)
    restricted = {}
    for tag, idx in blocks.items():
        try:
            restricted[tag] = [F.restrict(idx) for F in Fs]
        except InvalidFiltration as exc:
            raise NotWeightCompatible(f"block {tag!r}: {exc}") from exc
    for F in Fs:
        pts = F.breakpoints(F.base, F.top + 1)
        for lam in pts:
            pieces = []
            for tag, idx in blocks.items():
                sub = restricted[tag][Fs.index(F)].step(lam)
                pieces.extend(_embed(g, idx, V.rank) for g in sub.generators())
                level = sub.level
                for j in idx:
                    pieces.append(_embed(tuple(((_ZERO,) * level + (Fraction(1),)) if k == idx.index(j) else ()
                                               for k in range(len(idx))), idx, V.rank))
            floor = max(F.step(lam).level, 1)
            summed = Submodule.from_generators(pieces, V.rank, floor)
            if summed != F.step(lam):
                raise NotWeightCompatible(f"step at {lam} is not the sum of its weight pieces")
    vectors, ords, out_tags = [], [], []
    for tag in sorted(blocks, key=repr):
        idx = blocks[tag]
        diag = diagonalize_dvr(restricted[tag], seed)
        for v, o in zip(diag.vectors, diag.ord_vectors):
            vectors.append(_embed(v, idx, V.rank))
            ords.append(o)
            out_tags.append(tag)
    if not verify_diagonalizes_dvr(vectors, Fs):
        raise InvariantViolation("blockwise bases do not diagonalize the full filtrations")
    sections = tuple(V.combination(v) for v in vectors)
    ord_maps = tuple({i: o[i] for i in range(len(Fs))} for o in ords)
    return ThetaBasis(sections, ord_maps, (), tuple(out_tags))


def _embed(v: PolyVec, idx: Sequence[int], n: int) -> PolyVec:
    out = [()] * n
    for k, i in enumerate(idx):
        out[i] = v[k]
    return tuple(out)


# -- cones ---------------------------------------------------------------------


@dataclass
class ConeSpace:
    """Direct sum of level spaces, with the level carried by an extra variable ``z``."""

    levels: tuple[SectionSpace, ...]
    assembled: SectionSpace
    tags: tuple[int, ...]

    def level_parts(self, f: LaurentPoly) -> dict[int, LaurentPoly]:
        parts: dict[int, dict] = {}
        for (k, beta), c in f.terms.items():
            parts.setdefault(beta[-1], {})[(k, beta[:-1])] = c
        return {i: LaurentPoly(t, f.num_vars - 1, f.precision) for i, t in parts.items()}

    def ord_0(self, f: LaurentPoly) -> int:
        return min(self.level_parts(f))

    def ord_D(self, f: LaurentPoly) -> int:
        return min(-i for i in self.level_parts(f))

    def lift(self, v: MonomialValuation) -> MonomialValuation:
        return MonomialValuation(v.weights + (_ZERO,))


def cone_assemble(levels: Sequence[SectionSpace]) -> ConeSpace:
    sections, tags = [], []
    for i, W in enumerate(levels):
        for s in W.sections:
            sections.append(s.add_variable(i))
            tags.append(i)
    return ConeSpace(tuple(levels), SectionSpace(sections), tuple(tags))


def lift_complex(K: SkeletonComplex) -> SkeletonComplex:
    verts = [DivisorData(d.label, d.weights + (_ZERO,), d.b, d.A) for d in K.vertices]
    return SkeletonComplex(verts, K.maximal)


def cone_basis(cone: ConeSpace, K: SkeletonComplex, seed: int | None = None) -> ThetaBasis:
    """Homogeneous certified basis of the assembled space for the lifted valuations."""
    KL = lift_complex(K)
    points, Fs = vertex_filtrations(cone.assembled, KL)
    eq = equivariant_diagonalize(cone.assembled, cone.tags, Fs, seed)
    cert = _certify(eq.sections, KL, eq.tags)
    return cert


def cone_extract(theta: ThetaBasis, m: int, cone: ConeSpace, K: SkeletonComplex) -> ThetaBasis:
    """The members of ``theta`` living in level ``m``, certified on ``W_m``."""
    picked = [s for s in theta.sections if cone.ord_0(s) >= m and cone.ord_D(s) >= -m]
    W = cone.levels[m]
    parts = [cone.level_parts(s).get(m) for s in picked]
    if len(parts) != W.rank or any(p is None for p in parts):
        raise NotGradedBasis(f"{len(parts)} sections selected for level {m} of rank {W.rank}")
    coords = [W.coordinates(p) for p in parts]
    rows = [[c[0] if c else _ZERO for c in v] for v in coords]
    from .linfield import rref

    if len(rref(rows, W.rank)[0]) != W.rank:
        raise NotGradedBasis(f"selected sections do not span level {m}")
    return _certify(parts, K)


# -- graded ring sample checks ---------------------------------------------------


@dataclass(frozen=True)
class GrRingReport:
    multiplicative: bool
    injective: bool
    reduced: str = "unchecked"
    samples: int = 0
    warnings: tuple[str, ...] = ()
    failures: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.multiplicative and self.injective


def _class_nonzero(Fs: Sequence[DvrFiltration], coords: PolyVec) -> tuple[bool, tuple]:
    lam = tuple(F.ord(coords) for F in Fs)
    top, denom = graded_quotient(Fs, lam)
    return not denom.contains(coords), lam


def gr_ring_check(families: Mapping[int, SectionSpace], valuations: Sequence[MonomialValuation],
                  unit: tuple[int, LaurentPoly], samples: Sequence[tuple[int, LaurentPoly]]) -> GrRingReport:
    """Sample checks on the multigraded ring of a family of section spaces.

    Multiplicativity: filtration orders of a product equal the sum of the
    factors' orders.  Injectivity: multiplication by the class of ``unit``
    sends nonzero classes to nonzero classes.
    """
    if not samples:
        return GrRingReport(True, True, samples=0, warnings=("empty sample; nothing was checked",))
    filts = {m: [induced_filtration_single(v, W) for v in valuations] for m, W in families.items()}
    failures = []
    warnings = []
    mult_ok = True
    inj_ok = True

    def orders(m, f):
        c = families[m].coordinates(f)
        return tuple(F.ord(c) for F in filts[m])

    for (a, f), (b, g) in itertools.combinations_with_replacement(samples, 2):
        if a + b not in families:
            warnings.append(f"product of levels {a} and {b} is outside the family")
            continue
        try:
            lhs = orders(a + b, f * g)
        except NotIndependent:
            warnings.append(f"({f}) * ({g}) is not in level {a + b}; skipped")
            continue
        rhs = tuple(x + y for x, y in zip(orders(a, f), orders(b, g)))
        if lhs != rhs:
            mult_ok = False
            failures.append(f"orders of ({f}) * ({g}) are {lhs}, expected {rhs}")
    ul, u = unit
    for a, f in samples:
        if a + ul not in families:
            warnings.append(f"level {a + ul} needed for the unit product is outside the family")
            continue
        nz, lam = _class_nonzero(filts[a], families[a].coordinates(f))
        if not nz:
            continue
        try:
            target = families[a + ul].coordinates(u * f)
        except NotIndependent:
            warnings.append(f"({u}) * ({f}) is not in level {a + ul}; skipped")
            continue
        nz2, lam2 = _class_nonzero(filts[a + ul], target)
        if not nz2:
            inj_ok = False
            failures.append(f"class of ({u}) * ({f}) vanishes in degree {lam2}")
    return GrRingReport(mult_ok, inj_ok, samples=len(samples), warnings=tuple(warnings), failures=tuple(failures))
