"""
Skeleton complexes and their piecewise-affine refinements.

Points of a simplex are handled in normalized coordinates
``u_j = alpha_j b_j / sum(alpha b)`` (non-negative, summing to 1).  The point
valuation has weights ``sum_j u_j w_j / b_j``, which is linear in ``u``; so
every monomial term ``t^k x^beta`` has a value that is linear in ``u`` with
coefficient ``k + <w_j, beta> / b_j`` at vertex ``j``.  Cells are stored in
these coordinates.

Cells carry an H-representation in the ``p`` free coordinates ``u_1..u_p``
(``u_0 = 1 - sum``) and an exactly enumerated vertex list.  Simplices of
dimension above 3 are rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import LaurentPoly, frac
from .errors import InvariantViolation, NotASimplex, UnsupportedDimension
from .valuation import DivisorData, MonomialValuation, skeleton_membership

MAX_DIM = 3
_ZERO = Fraction(0)

Term = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class SkeletonPoint:
    """Point of the complex: sorted ``(vertex, u)`` pairs with ``u > 0``."""

    coords: tuple[tuple[int, Fraction], ...]

    @classmethod
    def make(cls, simplex: Sequence[int], u: Sequence) -> SkeletonPoint:
        pairs = sorted((j, frac(x)) for j, x in zip(simplex, u) if frac(x) != 0)
        return cls(tuple(pairs))

    def u(self, simplex: Sequence[int]) -> tuple[Fraction, ...]:
        d = dict(self.coords)
        return tuple(d.get(j, _ZERO) for j in simplex)

    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.coords)

    def __str__(self):
        return "{" + ", ".join(f"E{j}: {x}" for j, x in self.coords) + "}"


class SkeletonComplex:
    def __init__(self, vertices: Sequence[DivisorData], simplices: Iterable[Iterable[int]]):
        self.vertices = tuple(vertices)
        if not self.vertices:
            raise InvariantViolation("a skeleton needs at least one vertex")
        n = len(self.vertices[0].weights)
        for d in self.vertices:
            if len(d.weights) != n:
                raise InvariantViolation(f"divisor {d.label!r} has {len(d.weights)} weights, expected {n}")
        self.num_vars = n
        faces: set[tuple[int, ...]] = set()
        maximal = []
        for s in simplices:
            s = tuple(sorted(set(int(j) for j in s)))
            if not s or any(not 0 <= j < len(self.vertices) for j in s):
                raise NotASimplex(f"bad simplex {s}")
            if len(s) - 1 > MAX_DIM:
                raise UnsupportedDimension(f"simplex {s} has dimension above {MAX_DIM}")
            maximal.append(s)
            for r in range(1, len(s) + 1):
                faces.update(itertools.combinations(s, r))
        for j in range(len(self.vertices)):
            faces.add((j,))
        self.faces = frozenset(faces)
        self.maximal = tuple(sorted(s for s in faces if not any(set(s) < set(t) for t in faces)))
        for j, d in enumerate(self.vertices):
            alpha = [Fraction(0)] * len(self.vertices)
            alpha[j] = Fraction(1, d.b)
            if not skeleton_membership(self.vertices, alpha):
                raise InvariantViolation(f"vertex {d.label!r} is not on the skeleton (log discrepancy {d.A})")

    @property
    def dimension(self) -> int:
        return max(len(s) for s in self.maximal) - 1

    def check_simplex(self, simplex: Sequence[int]) -> tuple[int, ...]:
        s = tuple(sorted(simplex))
        if s not in self.faces:
            raise NotASimplex(f"{s} is not a simplex of the complex")
        return s

    def term_coefficients(self, simplex: Sequence[int], term: Term) -> tuple[Fraction, ...]:
        """Values of ``t^k x^beta`` at the vertices of ``simplex``."""
        k, beta = term
        out = []
        for j in simplex:
            d = self.vertices[j]
            out.append(k + sum((w * b for w, b in zip(d.weights, beta)), _ZERO) / d.b)
        return tuple(out)

    def valuation_at(self, point: SkeletonPoint) -> MonomialValuation:
        weights = [_ZERO] * self.num_vars
        for j, u in point.coords:
            d = self.vertices[j]
            for i, w in enumerate(d.weights):
                weights[i] += u * w / d.b
        return MonomialValuation(tuple(weights))

    def alpha_of(self, point: SkeletonPoint) -> tuple[Fraction, ...]:
        """Cone coordinates on the skeleton (``sum alpha_j b_j = 1``)."""
        alpha = [_ZERO] * len(self.vertices)
        for j, u in point.coords:
            alpha[j] = u / self.vertices[j].b
        return tuple(alpha)

    def point_from_alpha(self, simplex: Sequence[int], alpha: Sequence) -> SkeletonPoint:
        simplex = self.check_simplex(simplex)
        alpha = [frac(a) for a in alpha]
        if len(alpha) != len(simplex) or any(a < 0 for a in alpha) or not any(alpha):
            raise ValueError("barycentric coordinates must be non-negative and not all zero")
        norm = sum(a * self.vertices[j].b for a, j in zip(alpha, simplex))
        return SkeletonPoint.make(simplex, [a * self.vertices[j].b / norm for a, j in zip(alpha, simplex)])


def point_valuation(K: SkeletonComplex, simplex: Sequence[int], alpha: Sequence) -> MonomialValuation:
    """Normalized valuation ``(sum alpha_j b_j)^-1 sum alpha_j ord_{E_j}``."""
    simplex = K.check_simplex(simplex)
    alpha = [frac(a) for a in alpha]
    if len(alpha) != len(simplex) or any(a < 0 for a in alpha) or sum(alpha) != 1:
        raise ValueError("alpha must be barycentric coordinates on the simplex")
    norm = sum(a * K.vertices[j].b for a, j in zip(alpha, simplex))
    weights = [_ZERO] * K.num_vars
    for a, j in zip(alpha, simplex):
        for i, w in enumerate(K.vertices[j].weights):
            weights[i] += a * w
    return MonomialValuation(tuple(w / norm for w in weights))


# -- polytopes -----------------------------------------------------------------


def _solve(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Unique solution of a square system, or None."""
    n = len(a)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c]), None)
        if p is None:
            return None
        m[c], m[p] = m[p], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] for r in range(n)]


Ineq = tuple[tuple[Fraction, ...], Fraction]


def _vertices(ineqs: Sequence[Ineq], p: int) -> list[tuple[Fraction, ...]]:
    if p == 0:
        return [()]
    found = set()
    for combo in itertools.combinations(ineqs, p):
        x = _solve([list(a) for a, _ in combo], [b for _, b in combo])
        if x is None:
            continue
        if all(sum(ai * xi for ai, xi in zip(a, x)) <= b for a, b in ineqs):
            found.add(tuple(x))
    return sorted(found)


def _prune(ineqs: Sequence[Ineq], verts: Sequence[tuple[Fraction, ...]], p: int) -> tuple[Ineq, ...]:
    out = []
    for a, b in ineqs:
        tight = sum(1 for x in verts if sum(ai * xi for ai, xi in zip(a, x)) == b)
        if tight >= p and (a, b) not in out:
            out.append((a, b))
    return tuple(out)


def _free_form(c: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], Fraction]:
    """``sum_j c_j u_j`` as ``offset + slope . (u_1..u_p)``."""
    return tuple(cj - c[0] for cj in c[1:]), c[0]


def _full_u(x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return (1 - sum(x, _ZERO),) + tuple(x)


@dataclass(frozen=True)
class Cell:
    """Rational polytope inside one maximal simplex, in free coordinates."""

    simplex: tuple[int, ...]
    inequalities: tuple[Ineq, ...]
    vertices: tuple[tuple[Fraction, ...], ...]
    forms: tuple[Term, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.simplex) - 1

    def points(self) -> list[SkeletonPoint]:
        return [SkeletonPoint.make(self.simplex, _full_u(x)) for x in self.vertices]

    def centroid(self) -> tuple[Fraction, ...]:
        n = len(self.vertices)
        return tuple(sum((x[i] for x in self.vertices), _ZERO) / n for i in range(self.dim))

    def contains(self, x: Sequence[Fraction]) -> bool:
        return all(sum((ai * xi for ai, xi in zip(a, x)), _ZERO) <= b for a, b in self.inequalities)

    def split(self, c: Sequence[Fraction], m: Fraction) -> tuple[Cell, Cell] | None:
        """Cut along ``sum c_j u_j = m`` when it meets the interior."""
        slope, off = _free_form(c)
        vals = [off + sum((s * xi for s, xi in zip(slope, x)), _ZERO) for x in self.vertices]
        if max(vals) <= m or min(vals) >= m:
            return None
        p = self.dim
        below = self.inequalities + ((slope, m - off),)
        above = self.inequalities + ((tuple(-s for s in slope), off - m),)
        out = []
        for ineqs in (below, above):
            verts = _vertices(ineqs, p)
            out.append(Cell(self.simplex, _prune(ineqs, verts, p), tuple(verts)))
        return out[0], out[1]


def simplex_cell(simplex: Sequence[int]) -> Cell:
    p = len(simplex) - 1
    ineqs = []
    for i in range(p):
        a = [_ZERO] * p
        a[i] = Fraction(-1)
        ineqs.append((tuple(a), _ZERO))
    if p:
        ineqs.append((tuple([Fraction(1)] * p), Fraction(1)))
    verts = _vertices(ineqs, p)
    return Cell(tuple(simplex), tuple(ineqs), tuple(verts))


def _cut_all(cells: list[Cell], cuts: Iterable[tuple[tuple[Fraction, ...], Fraction]]) -> list[Cell]:
    for c, m in cuts:
        nxt = []
        for cell in cells:
            parts = cell.split(c, m)
            nxt.extend(parts if parts else [cell])
        cells = nxt
    return cells


def _level_cuts(diffs: Iterable[tuple[Fraction, ...]]) -> list[tuple[tuple[Fraction, ...], Fraction]]:
    """Integer level sets strictly inside the range of each linear function."""
    cuts = []
    seen = set()
    for g in diffs:
        lo, hi = min(g), max(g)
        for m in range(math.floor(lo) + 1, math.ceil(hi)):
            key = (g, m)
            if key not in seen:
                seen.add(key)
                cuts.append((g, Fraction(m)))
    return cuts


def _terms_of(sections: Sequence[LaurentPoly]) -> list[list[Term]]:
    return [sorted(s.terms) for s in sections]


def _active_term(K: SkeletonComplex, simplex, terms: Sequence[Term], x: Sequence[Fraction]) -> Term:
    u = _full_u(x)

    def value(term):
        return sum((c * ui for c, ui in zip(K.term_coefficients(simplex, term), u)), _ZERO)

    return min(terms, key=lambda t: (value(t), t))


@dataclass(frozen=True)
class Subdivision:
    complex: SkeletonComplex = field(repr=False)
    cells: tuple[Cell, ...]
    sections: tuple[LaurentPoly, ...] = ()

    def form_values(self, cell: Cell, index: int) -> tuple[Fraction, ...]:
        """Vertex-of-simplex values of the affine form recorded for section ``index``."""
        return self.complex.term_coefficients(cell.simplex, cell.forms[index])


def refine(K: SkeletonComplex, sections: Sequence[LaurentPoly] | object) -> Subdivision:
    """Cut every maximal simplex so that each element of the R-span of the sections is affine on each cell.

    For exponents ``beta != beta'`` in the joint support, the difference of
    the corresponding term values is linear in ``u``; its integer level sets
    are the cut hyperplanes (terms differ in ``t``-degree by integers).
    """
    sections = list(getattr(sections, "sections", sections))
    for s in sections:
        if s.is_zero():
            raise ValueError("cannot refine along a zero section")
        if s.num_vars != K.num_vars:
            raise InvariantViolation("sections and skeleton use different variables")
    support = sorted(set().union(*(s.support() for s in sections))) if sections else []
    per_section = _terms_of(sections)
    cells: list[Cell] = []
    for simplex in K.maximal:
        coeff = {beta: K.term_coefficients(simplex, (0, beta)) for beta in support}
        diffs = []
        for b1, b2 in itertools.combinations(support, 2):
            g = tuple(x - y for x, y in zip(coeff[b1], coeff[b2]))
            if any(g):
                diffs.append(g)
        parts = _cut_all([simplex_cell(simplex)], _level_cuts(diffs))
        for cell in parts:
            forms = tuple(_active_term(K, simplex, terms, cell.centroid()) for terms in per_section)
            cells.append(Cell(cell.simplex, cell.inequalities, cell.vertices, forms))
    return Subdivision(K, tuple(cells), tuple(sections))


def pairwise_refine(K: SkeletonComplex, terms: Sequence[Term]) -> list[Cell]:
    """Cells on which the minimum of the given terms is a single term."""
    cells: list[Cell] = []
    for simplex in K.maximal:
        coeffs = [K.term_coefficients(simplex, t) for t in terms]
        cuts = []
        seen = set()
        for c1, c2 in itertools.combinations(coeffs, 2):
            g = tuple(x - y for x, y in zip(c1, c2))
            if min(g) < 0 < max(g) and g not in seen:
                seen.add(g)
                cuts.append((g, _ZERO))
        for cell in _cut_all([simplex_cell(simplex)], cuts):
            form = _active_term(K, simplex, terms, cell.centroid())
            cells.append(Cell(cell.simplex, cell.inequalities, cell.vertices, (form,)))
    return cells


def subdivision_vertices(S: Subdivision) -> list[SkeletonPoint]:
    seen: dict[SkeletonPoint, None] = {}
    for cell in S.cells:
        for pt in cell.points():
            seen.setdefault(pt, None)
    return sorted(seen, key=lambda p: p.coords)


def vertex_valuations(S: Subdivision) -> list[MonomialValuation]:
    return [S.complex.valuation_at(p) for p in subdivision_vertices(S)]
