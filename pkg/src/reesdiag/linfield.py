r"""
Filtrations of finite-dimensional `\QQ`-vector spaces.

A :class:`FieldFiltration` of `V = \QQ^n` is a finite list of jumps
`(\lambda_k, S_k)` with `\lambda_k` strictly increasing and `S_k` strictly
decreasing.  It is left-continuous: `F^\lambda V = S_k` for
`\lambda_{k-1} < \lambda \le \lambda_k`, `F^\lambda V = V` for
`\lambda \le` ``base`` and `F^\lambda V = 0` past the last jump.

For filtrations `F_1, \dots, F_r` put `F^\lambda = \bigcap_j F_j^{\lambda_j}`
and `F^{>\lambda} = \sum_{\mu > \lambda} F^\mu`.  Because each `F_j` is
constant between consecutive jump values, `F^\lambda` only changes on the
product grid of the individual jump sets, and `F^{>\lambda}` is the sum over
`j` of `F^\lambda` with the `j`-th coordinate moved to its next jump.  So
`\mathrm{gr}^\lambda = F^\lambda / (F^{>\lambda} \cap F^\lambda)` vanishes off
that grid, and :func:`graded_table` only visits grid points.

The filtrations are simultaneously diagonalizable exactly when the graded
pieces have total dimension `n`; lifts of graded bases then diagonalize every
`F_j` (:func:`diagonalize_field`).

EXAMPLES::

    >>> from reesdiag.linfield import FieldFiltration, graded_table, diagonalize_field
    >>> e1, e2, d = (1, 0), (0, 1), (1, 1)
    >>> Fs = [FieldFiltration.flag(2, [(1, [v])]) for v in (e1, e2, d)]
    >>> graded_table(Fs).total
    3
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import frac
from .errors import DimensionMismatch, NotABasis, NotDiagonalizing, Obstruction

Vector = tuple[Fraction, ...]
MultiIndex = tuple[Fraction, ...]

_ZERO = Fraction(0)


def as_vector(v: Iterable) -> Vector:
    return tuple(frac(x) for x in v)


def rref(rows: Iterable[Sequence[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns the nonzero rows and pivot columns."""
    mat = [list(r) for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(mat):
            break
        p = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        prow = mat[r]
        inv = 1 / prow[c]
        if inv != 1:
            for j in range(c, ncols):
                if prow[j]:
                    prow[j] *= inv
        nz = [j for j in range(c, ncols) if prow[j]]
        for i in range(len(mat)):
            if i != r:
                row = mat[i]
                f = row[c]
                if f:
                    for j in nz:
                        row[j] -= f * prow[j]
        pivots.append(c)
        r += 1
    return mat[:r], pivots


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{x : row . x = 0 for all rows}``."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    out = []
    for f in free:
        x = [_ZERO] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, pivots):
            if row[f]:
                x[p] = -row[f]
        out.append(x)
    return out


def reduce_against(vec: Sequence[Fraction], basis: Sequence[Sequence[Fraction]], pivots: Sequence[int]) -> list[Fraction]:
    """Remainder of ``vec`` after elimination against an RREF basis."""
    v = list(vec)
    for row, p in zip(basis, pivots):
        f = v[p]
        if f:
            for j, x in enumerate(row):
                if x:
                    v[j] -= f * x
    return v


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``Q^n`` stored by its canonical RREF basis."""

    ambient_dim: int
    basis: tuple[Vector, ...]

    @classmethod
    def span(cls, vectors: Iterable[Iterable], ambient_dim: int) -> Subspace:
        vecs = [list(as_vector(v)) for v in vectors]
        for v in vecs:
            if len(v) != ambient_dim:
                raise DimensionMismatch(f"vector of length {len(v)} in Q^{ambient_dim}")
        red, _ = rref(vecs, ambient_dim)
        return cls(ambient_dim, tuple(tuple(r) for r in red))

    @classmethod
    def full(cls, n: int) -> Subspace:
        return cls(n, tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def zero(cls, n: int) -> Subspace:
        return cls(n, ())

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> list[int]:
        return [next(j for j, x in enumerate(r) if x) for r in self.basis]

    def contains(self, v: Iterable) -> bool:
        v = as_vector(v)
        if len(v) != self.ambient_dim:
            raise DimensionMismatch(f"vector of length {len(v)} in Q^{self.ambient_dim}")
        return not any(reduce_against(v, self.basis, self.pivots))

    def __contains__(self, v) -> bool:
        return self.contains(v)

    def _same_ambient(self, other: Subspace) -> None:
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(f"Q^{self.ambient_dim} vs Q^{other.ambient_dim}")

    def __add__(self, other: Subspace) -> Subspace:
        self._same_ambient(other)
        return Subspace.span([*self.basis, *other.basis], self.ambient_dim)

    def annihilator(self) -> list[list[Fraction]]:
        return nullspace(self.basis, self.ambient_dim)

    def __and__(self, other: Subspace) -> Subspace:
        self._same_ambient(other)
        if self.dim == self.ambient_dim:
            return other
        if other.dim == self.ambient_dim:
            return self
        eqs = self.annihilator() + other.annihilator()
        return Subspace.span(nullspace(eqs, self.ambient_dim), self.ambient_dim)

    intersect = __and__

    def issubspace(self, other: Subspace) -> bool:
        return all(other.contains(v) for v in self.basis)

    def complement_in(self, larger: Subspace, rng: random.Random | None = None) -> list[Vector]:
        """Vectors of ``larger`` extending a basis of ``self`` (assumed inside it).

        Candidates are the echelon rows of ``larger``; with ``rng`` they are
        first replaced by a random invertible recombination, which gives a
        different but equally valid choice.
        """
        cands = [list(r) for r in larger.basis]
        if rng is not None and cands:
            cands = _random_recombination(cands, rng)
        cur = [list(r) for r in self.basis]
        red, piv = rref(cur, self.ambient_dim)
        out = []
        for c in cands:
            rem = reduce_against(c, red, piv)
            if any(rem):
                out.append(tuple(c))
                red, piv = rref(red + [rem], self.ambient_dim)
        return out


def _random_recombination(rows: list[list[Fraction]], rng: random.Random) -> list[list[Fraction]]:
    n = len(rows)
    while True:
        m = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
        if len(rref(m, n)[0]) == n:
            break
    width = len(rows[0])
    return [[sum((m[i][k] * rows[k][j] for k in range(n)), _ZERO) for j in range(width)] for i in range(n)]


@dataclass(frozen=True)
class PlusInfinity:
    def __str__(self):
        return "+inf"


PLUS_INFINITY = PlusInfinity()


@dataclass(frozen=True)
class FieldFiltration:
    """Left-continuous decreasing filtration of ``Q^n`` with rational jumps."""

    ambient_dim: int
    jumps: tuple[tuple[Fraction, Subspace], ...]
    base: Fraction = Fraction(0)

    def __post_init__(self):
        n = self.ambient_dim
        base = frac(self.base)
        kept: list[tuple[Fraction, Subspace]] = []
        for lam, sub in sorted(((frac(l), s) for l, s in self.jumps), key=lambda p: p[0]):
            if sub.ambient_dim != n:
                raise DimensionMismatch(f"step in Q^{sub.ambient_dim}, filtration on Q^{n}")
            if kept and lam == kept[-1][0]:
                raise ValueError(f"repeated jump value {lam}")
            kept.append((lam, sub))
        # a step equal to V just raises the base; trailing zero steps are implicit
        while kept and kept[0][1].dim == n:
            base = max(base, kept[0][0])
            kept.pop(0)
        while kept and kept[-1][1].dim == 0:
            kept.pop()
        for (l0, s0), (l1, s1) in zip(kept, kept[1:]):
            if not (s1.issubspace(s0) and s1.dim < s0.dim):
                raise ValueError(f"steps at {l0} and {l1} are not strictly decreasing")
        if kept and kept[0][0] <= base:
            raise ValueError("first proper step must lie above the base")
        object.__setattr__(self, "jumps", tuple(kept))
        object.__setattr__(self, "base", base)

    @classmethod
    def flag(cls, n: int, steps: Iterable[tuple[object, Iterable[Iterable]]], base=0) -> FieldFiltration:
        """Build from ``(lambda, spanning vectors)`` pairs."""
        return cls(n, tuple((frac(l), Subspace.span(vs, n)) for l, vs in steps), frac(base))

    @classmethod
    def from_basis(cls, basis: Sequence[Iterable], orders: Sequence[object]) -> FieldFiltration:
        """The filtration diagonalized by ``basis`` with the given orders."""
        basis = [as_vector(b) for b in basis]
        n = len(basis)
        orders = [frac(o) for o in orders]
        vals = sorted(set(orders))
        steps = [(lam, Subspace.span([b for b, o in zip(basis, orders) if o >= lam], n)) for lam in vals]
        return cls(n, tuple(steps), min(vals) if vals else Fraction(0))

    def step(self, lam) -> Subspace:
        lam = frac(lam)
        if lam <= self.base:
            return Subspace.full(self.ambient_dim)
        for l, s in self.jumps:
            if lam <= l:
                return s
        return Subspace.zero(self.ambient_dim)

    def values(self) -> list[Fraction]:
        """Every value an order can take: the base and the jumps."""
        return [self.base] + [l for l, _ in self.jumps]

    def next_value(self, lam: Fraction) -> Fraction | None:
        for v in self.values():
            if v > lam:
                return v
        return None

    def above(self, lam) -> Subspace:
        """``F^{lam + eps}`` for small ``eps > 0``."""
        nxt = self.next_value(frac(lam))
        return Subspace.zero(self.ambient_dim) if nxt is None else self.step(nxt)


def _check_dims(Fs: Sequence[FieldFiltration]) -> int:
    if not Fs:
        raise ValueError("need at least one filtration")
    n = Fs[0].ambient_dim
    for F in Fs:
        if F.ambient_dim != n:
            raise DimensionMismatch("filtrations live on different spaces")
    return n


def ord_filtration(F: FieldFiltration, s) -> Fraction | PlusInfinity:
    """``max { lam : s in F^lam }``, or ``PLUS_INFINITY`` for ``s = 0``."""
    s = as_vector(s)
    if len(s) != F.ambient_dim:
        raise DimensionMismatch(f"vector of length {len(s)} in Q^{F.ambient_dim}")
    if not any(s):
        return PLUS_INFINITY
    best = F.base
    for lam, sub in F.jumps:
        if sub.contains(s):
            best = lam
        else:
            break
    return best


def multi_intersection(Fs: Sequence[FieldFiltration], lam: Sequence) -> Subspace:
    n = _check_dims(Fs)
    if len(lam) != len(Fs):
        raise DimensionMismatch(f"multi-index of length {len(lam)} for {len(Fs)} filtrations")
    out = Subspace.full(n)
    for F, l in zip(Fs, lam):
        out = out & F.step(l)
    return out


@dataclass(frozen=True)
class GradedEntry:
    dim: int
    representatives: tuple[Vector, ...]


@dataclass(frozen=True)
class GradedTable:
    """Nonzero graded pieces keyed by multi-index."""

    entries: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(e.dim for e in self.entries.values())

    def dims(self) -> dict[MultiIndex, int]:
        return {lam: e.dim for lam, e in self.entries.items()}

    def jump_multiset(self) -> Counter:
        return Counter({lam: e.dim for lam, e in self.entries.items()})


def graded_table(Fs: Sequence[FieldFiltration], seed: int | None = None) -> GradedTable:
    n = _check_dims(Fs)
    rng = random.Random(seed) if seed is not None else None
    grids = [F.values() for F in Fs]
    entries = {}
    for lam in itertools.product(*grids):
        steps = [F.step(l) for F, l in zip(Fs, lam)]
        top = Subspace.full(n)
        for s in steps:
            top = top & s
        if top.dim == 0:
            continue
        higher = Subspace.zero(n)
        for j, F in enumerate(Fs):
            piece = F.above(lam[j])
            for i, s in enumerate(steps):
                if i != j:
                    piece = piece & s
            higher = higher + piece
        reps = higher.complement_in(top, rng)
        if reps:
            entries[tuple(lam)] = GradedEntry(len(reps), tuple(reps))
    return GradedTable(entries)


@dataclass(frozen=True)
class DiagonalizingBasis:
    vectors: tuple[Vector, ...]
    ord_vectors: tuple[MultiIndex, ...]


def diagonalize_field(Fs: Sequence[FieldFiltration], seed: int | None = None) -> DiagonalizingBasis:
    """Simultaneously diagonalizing basis built from graded representatives.

    Raises :class:`~reesdiag.errors.Obstruction` carrying the graded table
    when its total dimension differs from ``dim V``.
    """
    n = _check_dims(Fs)
    table = graded_table(Fs, seed)
    if table.total != n:
        raise Obstruction(table, n)
    vecs, ords = [], []
    for lam in sorted(table.entries):
        for v in table.entries[lam].representatives:
            vecs.append(v)
            ords.append(lam)
    if not verify_diagonalizes(vecs, Fs):
        raise AssertionError("graded lift failed to diagonalize")  # contract breach, not user error
    return DiagonalizingBasis(tuple(vecs), tuple(ords))


def verify_diagonalizes(basis: Sequence[Iterable], Fs: Sequence[FieldFiltration]) -> bool:
    """Check ``F^lam = span(s_i : ord(s_i) >= lam)`` at every jump of every ``F``."""
    n = _check_dims(Fs)
    basis = [as_vector(b) for b in basis]
    if len(basis) != n or Subspace.span(basis, n).dim != n:
        raise NotABasis(f"{len(basis)} vectors do not form a basis of Q^{n}")
    for F in Fs:
        ords = [ord_filtration(F, b) for b in basis]
        for lam in F.values():
            spanned = Subspace.span([b for b, o in zip(basis, ords) if o >= lam], n)
            if spanned != F.step(lam):
                return False
    return True


def jump_multiset(basis: Sequence[Iterable], Fs: Sequence[FieldFiltration]) -> Counter:
    if not verify_diagonalizes(basis, Fs):
        raise NotDiagonalizing("basis does not diagonalize the filtrations")
    return Counter(tuple(ord_filtration(F, b) for F in Fs) for b in basis)
