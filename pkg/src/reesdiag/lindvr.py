r"""
Linear algebra and filtrations over `R = \QQ[[t]]`.

Submodules
----------
Every submodule met here has finite colength: it contains `t^M V` for some
`M`, where `V = R^n`.  Such an `A` is the same thing as the `t`-stable
`\QQ`-subspace `A / t^M V` of `V / t^M V \cong \QQ^{nM}` (coordinate `j`,
degree `k` sits at position `jM + k`).  :class:`Submodule` stores that
subspace at the least admissible `M`, so sums, intersections, membership and
quotient dimensions are finite exact computations with no precision loss,
and equality of modules is equality of the stored echelon data.

Filtrations
-----------
A :class:`DvrFiltration` stores `F^\lambda V = V` for `\lambda \le` ``base``,
a finite list of proper steps `(\lambda_k, A_k)` and the periodicity rule
`F^{\lambda+1} V = t F^\lambda V` above the last stored value.  Validation
checks monotonicity and the compatibility `F^{\lambda+1} V \cap tV = t F^\lambda V`.

For filtrations `F_1, \dots, F_r` the graded piece at `\lambda` is
`F^\lambda / (F^{>\lambda} + t F^{\lambda - (1,\dots,1)})`.  Its class of a
vector `s \notin tV` can only be nonzero when every `\lambda_j` is a jump of
`F_j` not exceeding the last `\lambda` with `F_j^\lambda \not\subset tV`; a
vector in `tV` always lands in `t F^{\lambda-(1,\dots,1)}` by the compatibility
condition.  That is the finite grid :func:`dvr_graded_table` scans.

Lifting
-------
:func:`torsor_transfer` and :func:`lift_chain` turn per-level diagonalizing
bases of `V / t^i V` into one compatible basis, by moving each new level's
basis with a transition matrix whose entries satisfy the divisibility
constraints of :func:`constraint_matrix`.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .arith import AbovePrecision, TruncatedSeries, frac
from .errors import (
    DimensionMismatch,
    InvalidFiltration,
    NotABasis,
    NotDiagonalizableMod,
    NotDiagonalizing,
    NotInTorsor,
    Obstruction,
    PrecisionExhausted,
)
from .linfield import PLUS_INFINITY, PlusInfinity, _random_recombination, reduce_against, rref

Poly = tuple[Fraction, ...]
PolyVec = tuple[Poly, ...]

_ZERO = Fraction(0)


# -- polynomial vectors ------------------------------------------------------


def as_poly(entry) -> Poly:
    """Dense, trimmed coefficient tuple of an element of R."""
    if isinstance(entry, TruncatedSeries):
        coeffs = list(entry.dense())
    elif isinstance(entry, (int, Fraction, str)):
        coeffs = [frac(entry)]
    else:
        coeffs = [frac(c) for c in entry]
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return tuple(coeffs)


def as_polyvec(vec: Iterable) -> PolyVec:
    return tuple(as_poly(e) for e in vec)


def poly_ord(p: Poly) -> int | None:
    return next((k for k, c in enumerate(p) if c), None)


def vec_ord(v: PolyVec) -> int | None:
    """t-adic order of a vector; None for the zero vector."""
    orders = [o for o in (poly_ord(p) for p in v) if o is not None]
    return min(orders) if orders else None


def _truncate_poly(p: Poly, level: int) -> Poly:
    return as_poly(p[:level])


def truncate_vec(v: PolyVec, level: int) -> PolyVec:
    return tuple(_truncate_poly(p, level) for p in v)


def shift_vec(v: PolyVec, c: int) -> PolyVec:
    return tuple(((_ZERO,) * c + p) if p else () for p in v)


def _poly_mul(a: Poly, b: Poly, level: int | None = None) -> Poly:
    if not a or not b:
        return ()
    n = len(a) + len(b) - 1 if level is None else min(level, len(a) + len(b) - 1)
    out = [_ZERO] * max(n, 0)
    for i, x in enumerate(a):
        if not x or i >= n:
            continue
        for j, y in enumerate(b):
            if i + j >= n:
                break
            if y:
                out[i + j] += x * y
    return as_poly(out)


def _poly_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return as_poly([(a[k] if k < len(a) else _ZERO) + (b[k] if k < len(b) else _ZERO) for k in range(n)])


def _poly_scale(a: Poly, c: Fraction) -> Poly:
    return as_poly([c * x for x in a])


def _poly_inv(a: Poly, level: int) -> Poly:
    if not a or not a[0]:
        raise ZeroDivisionError("not a unit")
    inv = [_ZERO] * level
    inv[0] = 1 / a[0]
    for k in range(1, level):
        s = sum((a[j] * inv[k - j] for j in range(1, min(k, len(a) - 1) + 1)), _ZERO)
        inv[k] = -s * inv[0]
    return as_poly(inv)


def vec_combination(coeffs: Sequence[Poly], vecs: Sequence[PolyVec], level: int | None = None) -> PolyVec:
    n = len(vecs[0])
    out: list[Poly] = [()] * n
    for a, v in zip(coeffs, vecs):
        if not a:
            continue
        for j in range(n):
            out[j] = _poly_add(out[j], _poly_mul(a, v[j], level))
    return tuple(out)


def _flatten(v: PolyVec, level: int) -> list[Fraction]:
    row = [_ZERO] * (len(v) * level)
    for j, p in enumerate(v):
        for k, c in enumerate(p[:level]):
            row[j * level + k] = c
    return row


def _unflatten(row: Sequence[Fraction], n: int, level: int) -> PolyVec:
    return tuple(as_poly(row[j * level:(j + 1) * level]) for j in range(n))


# -- submodules --------------------------------------------------------------


@dataclass(frozen=True)
class Submodule:
    """Finite-colength R-submodule of ``R^rank``.

    ``level`` is the least ``M`` with ``t^M R^rank`` inside the module (the
    floor exponent); ``rows`` is the echelon basis of the image in
    ``(R/t^M)^rank`` flattened to ``Q^(rank*M)``.
    """

    rank: int
    level: int
    rows: tuple[tuple[Fraction, ...], ...]

    # construction

    @classmethod
    def _make(cls, rank: int, level: int, rows: Iterable[Sequence[Fraction]]) -> Submodule:
        red, _ = rref(rows, rank * level)
        while level > 0:
            units = {j * level + level - 1 for j in range(rank)}
            hits = 0
            for r in red:
                nz = [c for c, x in enumerate(r) if x]
                if len(nz) == 1 and nz[0] in units:
                    hits += 1
            if hits < rank:
                break
            keep = [c for c in range(rank * level) if c not in units]
            red = [[r[c] for c in keep] for r in red if any(r[c] for c in keep)]
            level -= 1
        return cls(rank, level, tuple(tuple(r) for r in red))

    @classmethod
    def full(cls, rank: int) -> Submodule:
        return cls(rank, 0, ())

    @classmethod
    def t_power(cls, rank: int, m: int) -> Submodule:
        return cls(rank, m, ()) if m > 0 else cls.full(rank)

    @classmethod
    def from_generators(cls, gens: Iterable[Iterable], rank: int, floor: int) -> Submodule:
        """The module ``R<gens> + t^floor R^rank``."""
        rows = []
        for g in gens:
            g = as_polyvec(g)
            if len(g) != rank:
                raise DimensionMismatch(f"generator of length {len(g)} in R^{rank}")
            for s in range(floor):
                row = _flatten(shift_vec(g, s), floor)
                if any(row):
                    rows.append(row)
        return cls._make(rank, floor, rows)

    # views

    @property
    def floor_exponent(self) -> int:
        return self.level

    @property
    def colength(self) -> int:
        """``dim_Q (R^rank / self)``."""
        return self.rank * self.level - len(self.rows)

    def rows_at(self, level: int) -> list[list[Fraction]]:
        if level < self.level:
            raise ValueError("cannot represent a module below its floor level")
        out = []
        L = self.level
        for r in self.rows:
            row = [_ZERO] * (self.rank * level)
            for j in range(self.rank):
                row[j * level:j * level + L] = r[j * L:(j + 1) * L]
            out.append(row)
        for j in range(self.rank):
            for k in range(L, level):
                row = [_ZERO] * (self.rank * level)
                row[j * level + k] = Fraction(1)
                out.append(row)
        return out

    def generators(self) -> list[PolyVec]:
        """Q-basis of ``self / t^level R^rank`` as vectors; with ``t^level R^rank`` they generate."""
        return [_unflatten(r, self.rank, self.level) for r in self.rows]

    # algebra

    def _check(self, other: Submodule) -> int:
        if self.rank != other.rank:
            raise DimensionMismatch(f"R^{self.rank} vs R^{other.rank}")
        return max(self.level, other.level)

    def __add__(self, other: Submodule) -> Submodule:
        L = self._check(other)
        return Submodule._make(self.rank, L, self.rows_at(L) + other.rows_at(L))

    def __and__(self, other: Submodule) -> Submodule:
        return module_intersect(self, other)

    def shift(self, c: int) -> Submodule:
        """``t^c`` times this module."""
        if c == 0:
            return self
        L = self.level + c
        rows = self.rows_at(self.level)
        out = []
        for r in rows:
            v = _unflatten(r, self.rank, self.level)
            out.append(_flatten(shift_vec(v, c), L))
        # t^c * t^level R^n = t^L R^n is implicit
        return Submodule._make(self.rank, L, out)

    def plus_t_power(self, i: int) -> Submodule:
        """``self + t^i R^rank``."""
        if i >= self.level:
            return self
        rows = []
        for r in self.rows:
            v = truncate_vec(_unflatten(r, self.rank, self.level), i)
            rows.append(_flatten(v, i))
        return Submodule._make(self.rank, i, rows)

    def contains(self, vec: Iterable) -> bool:
        v = as_polyvec(vec)
        if len(v) != self.rank:
            raise DimensionMismatch(f"vector of length {len(v)} in R^{self.rank}")
        if self.level == 0:
            return True
        piv = [next(c for c, x in enumerate(r) if x) for r in self.rows]
        return not any(reduce_against(_flatten(v, self.level), self.rows, piv))

    def __contains__(self, vec) -> bool:
        return self.contains(vec)

    def issubmodule(self, other: Submodule) -> bool:
        L = self._check(other)
        piv_rows = other.rows_at(L)
        red, piv = rref(piv_rows, self.rank * L)
        return all(not any(reduce_against(r, red, piv)) for r in self.rows_at(L))

    def complement_rows(self, larger: Submodule, rng: random.Random | None = None) -> list[PolyVec]:
        """Vectors of ``larger`` extending a Q-basis of ``self`` (assumed inside it)."""
        L = self._check(larger)
        cands = larger.rows_at(L)
        if rng is not None and cands:
            cands = _random_recombination(cands, rng)
        red, piv = rref(self.rows_at(L), self.rank * L)
        out = []
        for c in cands:
            rem = reduce_against(c, red, piv)
            if any(rem):
                out.append(_unflatten(c, self.rank, L))
                red, piv = rref(red + [rem], self.rank * L)
        return out

    def hermite(self) -> tuple[tuple[Poly, ...], ...]:
        """Canonical t-adic Hermite form (rows, upper triangular).

        Row ``j`` has zeros left of column ``j``, the entry ``t^{k_j}`` on
        the diagonal and, above each diagonal entry, polynomials of degree
        ``< k_j``.  Entries are polynomial representatives modulo ``t^level``.
        """
        n, L = self.rank, self.level
        gens = [list(_unflatten(r, n, L)) for r in self.rows]
        rows: list[list[Poly] | None] = []
        pivots: list[int] = []
        for j in range(n):
            best = None
            for idx, g in enumerate(gens):
                o = poly_ord(g[j])
                if o is not None and (best is None or o < best[1]):
                    best = (idx, o)
            if best is None:
                row = [()] * n
                row[j] = (_ZERO,) * L + (Fraction(1),)
                rows.append(row)
                pivots.append(L)
                continue
            idx, k = best
            piv = gens.pop(idx)
            unit = as_poly(piv[j][k:])
            inv = _poly_inv(unit, L)
            piv = [_poly_mul(p, inv, L) for p in piv]
            for g in gens:
                if g[j]:
                    q = as_poly(g[j][k:])
                    for c in range(n):
                        g[c] = as_poly(_poly_add(g[c], _poly_scale(_poly_mul(q, piv[c], L), Fraction(-1)))[:L])
            gens = [g for g in gens if any(g)]
            rows.append(piv)
            pivots.append(k)
        for l in range(n):
            k = pivots[l]
            for r in range(l):
                e = rows[r][l]
                if len(e) > k:
                    q = as_poly(e[k:])
                    for c in range(l, n):
                        rows[r][c] = as_poly(_poly_add(rows[r][c], _poly_scale(_poly_mul(q, rows[l][c], L + 1), Fraction(-1)))[:max(L, k + 1)])
        return tuple(tuple(r) for r in rows)

    def pivot_exponents(self) -> tuple[int, ...]:
        h = self.hermite()
        return tuple(poly_ord(h[j][j]) for j in range(self.rank))


def hermite_form(generators: Iterable[Iterable], rank: int, precision: int, floor: int | None = None) -> Submodule:
    """Canonical module spanned by ``generators``.

    With ``floor`` the module ``R<generators> + t^floor R^rank`` is returned.
    Without it, the span is computed modulo ``t^precision``; this is only
    certified when the result has colength below ``precision`` (then the
    span itself contains ``t^precision R^rank`` by Nakayama), and
    :class:`PrecisionExhausted` is raised otherwise.
    """
    if floor is not None:
        return Submodule.from_generators(generators, rank, floor)
    mod = Submodule.from_generators(generators, rank, precision)
    if mod.colength >= precision:
        raise PrecisionExhausted(
            f"span has colength >= {precision} modulo t^{precision}; pivot orders cannot be certified"
        )
    return mod


def module_intersect(A: Submodule, B: Submodule) -> Submodule:
    L = A._check(B)
    if A.level == 0:
        return B
    if B.level == 0:
        return A
    N = A.rank * L
    from .linfield import nullspace

    eqs = nullspace(A.rows_at(L), N) + nullspace(B.rows_at(L), N)
    return Submodule._make(A.rank, L, nullspace(eqs, N))


# -- filtrations -------------------------------------------------------------


def _lcm_den(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = d * v.denominator // math.gcd(d, v.denominator)
    return d


@dataclass(frozen=True, eq=False)
class DvrFiltration:
    """Bounded filtration of ``R^rank`` by finite-colength submodules.

    ``F^lam = R^rank`` for ``lam <= base``; ``F^lam = A_k`` for
    ``lam_{k-1} < lam <= lam_k``; ``F^lam = t^period F^(lam - period)``
    above the last stored value.  ``period`` is 1 except for the
    base-changed filtrations made by :func:`rescale`.
    """

    rank: int
    steps: tuple[tuple[Fraction, Submodule], ...]
    base: Fraction = Fraction(0)
    period: int = 1
    precision: int | None = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        base = frac(self.base)
        kept: list[tuple[Fraction, Submodule]] = []
        for lam, mod in sorted(((frac(l), m) for l, m in self.steps), key=lambda p: p[0]):
            if mod.rank != self.rank:
                raise DimensionMismatch(f"step in R^{mod.rank} for a filtration of R^{self.rank}")
            if kept and kept[-1][0] == lam:
                raise InvalidFiltration(f"repeated jump value {lam}")
            kept.append((lam, mod))
        while kept and kept[0][1].level == 0:
            base = max(base, kept[0][0])
            kept.pop(0)
        # equal consecutive steps: keep the one reaching further
        merged: list[tuple[Fraction, Submodule]] = []
        for lam, mod in kept:
            if merged and merged[-1][1] == mod:
                merged[-1] = (lam, mod)
            else:
                merged.append((lam, mod))
        if merged and merged[0][0] <= base:
            raise InvalidFiltration("first proper step must lie above the base")
        object.__setattr__(self, "steps", tuple(merged))
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "_cache", {})
        if self.validate:
            problems = self.problems()
            if problems:
                raise InvalidFiltration("; ".join(problems))

    # constructors

    @classmethod
    def from_basis(cls, basis: Sequence[Iterable], orders: Sequence[object], precision: int | None = None) -> DvrFiltration:
        """Filtration diagonalized by ``basis`` with the given orders.

        ``F^lam = sum_i t^{max(0, ceil(lam - o_i))} R s_i``.
        """
        basis = [as_polyvec(b) for b in basis]
        n = len(basis)
        _require_basis(basis, n)
        orders = [frac(o) for o in orders]
        lo, hi = min(orders), max(orders)
        d = _lcm_den(orders)
        steps = []
        lam = lo + Fraction(1, d)
        while lam <= hi:
            steps.append((lam, _diag_span(basis, orders, lam)))
            lam += Fraction(1, d)
        return cls(n, tuple(steps), lo, precision=precision)

    # evaluation

    @property
    def top(self) -> Fraction:
        """Last stored value; periodicity governs everything above it."""
        return self.steps[-1][0] if self.steps else self.base

    @property
    def denominator(self) -> int:
        return _lcm_den(self.values())

    def values(self) -> list[Fraction]:
        return [self.base] + [l for l, _ in self.steps]

    def step(self, lam) -> Submodule:
        lam = frac(lam)
        cache = self._cache
        if lam in cache:
            return cache[lam]
        if lam <= self.base:
            out = Submodule.full(self.rank)
        elif lam <= self.top:
            out = next(m for l, m in self.steps if lam <= l)
        else:
            c = math.ceil((lam - self.top) / self.period)
            out = self.step(lam - c * self.period).shift(c)
        cache[lam] = out
        return out

    def breakpoints(self, lo: Fraction, hi: Fraction) -> list[Fraction]:
        """Values in ``[lo, hi]`` where ``F`` can change (jumps and their shifts)."""
        out = set()
        p = self.period
        for v in self.values():
            c_lo = math.ceil((lo - v) / p)
            c_hi = math.floor((hi - v) / p)
            for c in range(c_lo, c_hi + 1):
                out.add(v + c * p)
        return sorted(out)

    def above(self, lam) -> Submodule:
        """``F^(lam + eps)`` for small ``eps > 0``."""
        lam = frac(lam)
        D = _lcm_den([*self.values(), lam])
        return self.step(lam + Fraction(1, 2 * D))

    def last_nontrivial(self) -> Fraction:
        """Largest ``lam`` with ``F^lam`` not inside ``tV``."""
        tV = Submodule.t_power(self.rank, 1)
        best = self.base
        for lam, mod in self.steps:
            if not mod.issubmodule(tV):
                best = lam
        return best

    def ord(self, vec, mod: int | None = None) -> Fraction | PlusInfinity:
        """``max{lam : vec in F^lam}``; with ``mod=i`` in the image on ``V/t^i V``."""
        v = as_polyvec(vec)
        if len(v) != self.rank:
            raise DimensionMismatch(f"vector of length {len(v)} in R^{self.rank}")
        if mod is not None:
            v = truncate_vec(v, mod)
        e = vec_ord(v)
        if e is None:
            return PLUS_INFINITY
        hi = self.top + (e + 1) * self.period
        for lam in reversed(self.breakpoints(self.base, hi)):
            step = self.step(lam)
            if mod is not None:
                step = step.plus_t_power(mod)
            if step.contains(v):
                return lam
        return self.base

    # transformations

    def shift(self, c) -> DvrFiltration:
        """The filtration ``lam -> F^(lam - c)`` (a metric shift by ``c``)."""
        c = frac(c)
        return DvrFiltration(self.rank, tuple((l + c, m) for l, m in self.steps), self.base + c,
                             self.period, self.precision, self.validate)

    def restrict(self, coords: Sequence[int]) -> DvrFiltration:
        """Intersect every step with the coordinate submodule on ``coords``."""
        coords = list(coords)
        m = len(coords)

        def cut(mod: Submodule) -> Submodule:
            if mod.level == 0:
                return Submodule.full(m)
            L = mod.level
            # vectors of mod supported on coords
            others = [j for j in range(self.rank) if j not in coords]
            block = Submodule._make(self.rank, L, [
                r for j in coords for r in _unit_rows(self.rank, L, j)
            ])
            inter = module_intersect(mod, block) if others else mod
            rows = []
            for r in inter.rows_at(L):
                v = _unflatten(r, self.rank, L)
                rows.append(_flatten(tuple(v[j] for j in coords), L))
            return Submodule._make(m, L, rows)

        return DvrFiltration(m, tuple((l, cut(A)) for l, A in self.steps), self.base, self.period,
                             self.precision, self.validate)

    # validation

    def problems(self) -> list[str]:
        out = []
        n = self.rank
        tV = Submodule.t_power(n, 1)
        for (l0, a), (l1, b) in zip(self.steps, self.steps[1:]):
            if not b.issubmodule(a):
                out.append(f"step at {l1} is not inside step at {l0}")
        if not self.above(self.top).issubmodule(self.step(self.top)):
            out.append("periodic continuation is not decreasing")
        p = self.period
        pts = set()
        for v in self.values():
            pts.update({v, v - p})
        for lam in sorted(pts):
            if lam < self.base - p or lam > self.top:
                continue
            lhs = module_intersect(self.step(lam + p), tV)
            rhs = self.step(lam).shift(1)
            if lhs != rhs:
                out.append(f"F^(lam+1) and tV meet in more or less than tF^lam at lam={lam}")
        return out

    def __eq__(self, other):
        if not isinstance(other, DvrFiltration):
            return NotImplemented
        return (self.rank, self.steps, self.base, self.period) == (other.rank, other.steps, other.base, other.period)

    def __hash__(self):
        return hash((self.rank, self.steps, self.base, self.period))


def _unit_rows(n: int, L: int, j: int) -> list[list[Fraction]]:
    rows = []
    for k in range(L):
        r = [_ZERO] * (n * L)
        r[j * L + k] = Fraction(1)
        rows.append(r)
    return rows


def _diag_span(basis: Sequence[PolyVec], orders: Sequence[Fraction], lam: Fraction) -> Submodule:
    exps = [max(0, math.ceil(lam - o)) for o in orders]
    floor = max(exps) if exps else 0
    return Submodule.from_generators([shift_vec(b, e) for b, e in zip(basis, exps)], len(basis[0]), floor)


def _residue_rank(vectors: Sequence[PolyVec], n: int) -> int:
    rows = [[p[0] if p else _ZERO for p in v] for v in vectors]
    return len(rref(rows, n)[0])


def _require_basis(vectors: Sequence[PolyVec], n: int) -> None:
    if len(vectors) != n or any(len(v) != n for v in vectors) or _residue_rank(vectors, n) != n:
        raise NotABasis(f"{len(vectors)} vectors are not a free basis of R^{n}")


def rescale(F: DvrFiltration, d: int) -> DvrFiltration:
    """Weight-zero part of the filtration after adjoining ``t^(1/d)``.

    The new filtration has ``G^lam = F^(lam/d)``, so orders are multiplied
    by ``d`` and ``t`` now shifts by ``d``.
    """
    if F.period != 1:
        raise InvalidFiltration("rescale expects an ordinary filtration")
    return DvrFiltration(F.rank, tuple((l * d, m) for l, m in F.steps), F.base * d, period=d,
                         precision=F.precision, validate=F.validate)


def _common_rank(Fs: Sequence[DvrFiltration]) -> int:
    if not Fs:
        raise ValueError("need at least one filtration")
    n = Fs[0].rank
    for F in Fs:
        if F.rank != n:
            raise DimensionMismatch("filtrations live on different modules")
        if F.period != 1:
            raise InvalidFiltration("graded computations need period-1 filtrations")
    return n


def _meet(mods: Iterable[Submodule], rank: int) -> Submodule:
    out = Submodule.full(rank)
    for m in mods:
        out = module_intersect(out, m)
    return out


def _image(mod: Submodule, i: int | None) -> Submodule:
    return mod if i is None else mod.plus_t_power(i)


# -- graded tables -----------------------------------------------------------


@dataclass(frozen=True)
class DvrGradedEntry:
    dim: int
    representatives: tuple[PolyVec, ...]


@dataclass(frozen=True)
class DvrGradedTable:
    entries: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(e.dim for e in self.entries.values())

    def dims(self) -> dict:
        return {lam: e.dim for lam, e in self.entries.items()}

    def jump_multiset(self) -> Counter:
        return Counter({lam: e.dim for lam, e in self.entries.items()})


def graded_quotient(Fs: Sequence[DvrFiltration], lam: Sequence[Fraction],
                    mod: int | None = None) -> tuple[Submodule, Submodule]:
    """Numerator ``F^lam`` and denominator ``F^{>lam} + t F^{lam-1}`` of a graded piece."""
    n = Fs[0].rank
    steps = [_image(F.step(l), mod) for F, l in zip(Fs, lam)]
    top = _meet(steps, n)
    higher = _meet((_image(F.step(l - 1), mod) for F, l in zip(Fs, lam)), n).shift(1)
    if mod is not None:
        higher = higher.plus_t_power(mod)
    for j, F in enumerate(Fs):
        piece = _image(F.above(lam[j]), mod)
        for i, s in enumerate(steps):
            if i != j:
                piece = module_intersect(piece, s)
        higher = higher + piece
    return top, higher


def graded_piece(Fs: Sequence[DvrFiltration], lam: Sequence[Fraction], mod: int | None = None,
                 rng: random.Random | None = None) -> tuple[int, list[PolyVec]]:
    """Dimension and representatives of ``F^lam / (F^{>lam} + t F^{lam-1})``."""
    top, higher = graded_quotient(Fs, lam, mod)
    reps = higher.complement_rows(top, rng)
    return len(reps), reps


def _graded_search(Fs: Sequence[DvrFiltration], grids: Sequence[Sequence[Fraction]]):
    """Multi-indices whose graded piece may be nonzero.

    A nonzero class at ``lam`` has a representative of order exactly
    ``lam_j`` for every ``j`` that is not in ``tV``.  Depth-first over the
    filtrations, a branch is cut as soon as the partial intersection lies in
    ``tV`` or inside one ``F_j^(>lam_j)``; both persist under further
    intersection, and the full piece then vanishes.
    """
    n = Fs[0].rank
    tV = Submodule.t_power(n, 1)

    def walk(k, lam, top, aboves):
        if k == len(Fs):
            yield tuple(lam)
            return
        F = Fs[k]
        for value in grids[k]:
            top2 = module_intersect(top, F.step(value))
            if top2.issubmodule(tV):
                continue
            aboves2 = aboves + [F.above(value)]
            if any(top2.issubmodule(a) for a in aboves2):
                continue
            yield from walk(k + 1, lam + [value], top2, aboves2)

    yield from walk(0, [], Submodule.full(n), [])


def dvr_graded_table(Fs: Sequence[DvrFiltration], seed: int | None = None, mod: int | None = None) -> DvrGradedTable:
    """Associated multigraded space over the residue field ``Q``.

    With ``mod=i`` the filtrations are replaced by their images on ``V/t^i V``;
    there ``t`` is a zero divisor, so the grid is scanned without pruning.
    """
    _common_rank(Fs)
    rng = random.Random(seed) if seed is not None else None
    grids = []
    for F in Fs:
        last = F.last_nontrivial()
        grids.append([v for v in F.values() if v <= last])
    candidates = itertools.product(*grids) if mod is not None else _graded_search(Fs, grids)
    entries = {}
    for lam in candidates:
        dim, reps = graded_piece(Fs, lam, mod, rng)
        if dim:
            entries[tuple(lam)] = DvrGradedEntry(dim, tuple(reps))
    return DvrGradedTable(dict(sorted(entries.items())))


@dataclass(frozen=True)
class DvrDiagonalizingBasis:
    vectors: tuple[PolyVec, ...]
    ord_vectors: tuple[tuple[Fraction, ...], ...]


def _table_basis(table: DvrGradedTable):
    vecs, ords = [], []
    for lam in sorted(table.entries):
        for v in table.entries[lam].representatives:
            vecs.append(v)
            ords.append(lam)
    return vecs, ords


def diagonalize_dvr(Fs: Sequence[DvrFiltration], seed: int | None = None) -> DvrDiagonalizingBasis:
    """Free basis diagonalizing every filtration, lifted from the graded table.

    Raises :class:`Obstruction` with the table when its total dimension is
    not the rank.
    """
    n = _common_rank(Fs)
    table = dvr_graded_table(Fs, seed)
    if table.total != n:
        raise Obstruction(table, n)
    vecs, ords = _table_basis(table)
    if not verify_diagonalizes_dvr(vecs, Fs):
        raise AssertionError("graded lift failed to diagonalize")
    return DvrDiagonalizingBasis(tuple(vecs), tuple(ords))


def _span_identity_holds(F: DvrFiltration, vecs: Sequence[PolyVec], mod: int | None) -> bool:
    orders = [F.ord(v, mod) for v in vecs]
    if any(o is PLUS_INFINITY for o in orders):
        return False
    lo = min(F.base, *orders)
    hi = max(F.top, *orders) + 1
    pts = set(F.breakpoints(lo, hi))
    for o in orders:
        pts.update(o + c for c in range(math.floor(lo - o), math.ceil(hi - o) + 1) if lo <= o + c <= hi)
    for lam in sorted(pts):
        lhs = _image(F.step(lam), mod)
        rhs = _image(_diag_span(vecs, orders, lam), mod)
        if lhs != rhs:
            return False
    return True


def verify_diagonalizes_dvr(vectors: Sequence[Iterable], Fs: Sequence[DvrFiltration]) -> bool:
    """Check ``F^lam = sum_i t^{max(0, ceil(lam - ord s_i))} R s_i`` at every breakpoint."""
    n = _common_rank(Fs)
    vecs = [as_polyvec(v) for v in vectors]
    _require_basis(vecs, n)
    return all(_span_identity_holds(F, vecs, None) for F in Fs)


def dvr_jump_multiset(vectors: Sequence[Iterable], Fs: Sequence[DvrFiltration]) -> Counter:
    if not verify_diagonalizes_dvr(vectors, Fs):
        raise NotDiagonalizing("basis does not diagonalize the filtrations")
    return Counter(tuple(F.ord(v) for F in Fs) for v in vectors)


def rees_quotient_check(Fs: Sequence[DvrFiltration], sample: Iterable[Sequence[int]] | None = None) -> bool:
    """Compare the Rees-side quotient with the graded table.

    For integer multi-indices ``lam`` (degrees of the d-th Rees module) the
    Rees side is ``dim F^(lam/d) / (sum_i F^((lam+e_i)/d) + t F^(lam/d - 1))``;
    the graded side is the table entry at ``lam/d``.  Without ``sample`` the
    full jump grid is used.
    """
    n = _common_rank(Fs)
    d = _lcm_den(v for F in Fs for v in F.values())
    table = dvr_graded_table(Fs)
    dims = table.dims()
    if sample is None:
        axes = []
        for F in Fs:
            pts = set()
            for v in F.values():
                for c in (0, 1):
                    if F.base <= v + c <= F.top + 1:
                        pts.add(int((v + c) * d))
            axes.append(sorted(pts))
        sample = itertools.product(*axes)
    for lam in sample:
        mu = tuple(Fraction(l, d) for l in lam)
        top = _meet((F.step(m) for F, m in zip(Fs, mu)), n)
        denom = _meet((F.step(m - 1) for F, m in zip(Fs, mu)), n).shift(1)
        for i in range(len(Fs)):
            bumped = [m + (Fraction(1, d) if j == i else 0) for j, m in enumerate(mu)]
            denom = denom + _meet((F.step(m) for F, m in zip(Fs, bumped)), n)
        rees_dim = module_intersect(denom, top).colength - top.colength
        if rees_dim != dims.get(mu, 0):
            return False
    return True


# -- modular bases and lifting -------------------------------------------------


@dataclass(frozen=True)
class ModBasis:
    """Basis of ``V / t^level V`` with the orders of its members."""

    level: int
    vectors: tuple[PolyVec, ...]
    ord_vectors: tuple[tuple[Fraction, ...], ...]

    def truncate(self, i: int) -> ModBasis:
        return ModBasis(i, tuple(truncate_vec(v, i) for v in self.vectors), self.ord_vectors)


def _check_precision(Fs: Sequence[DvrFiltration], i: int) -> None:
    for F in Fs:
        if F.precision is not None and i > F.precision:
            raise PrecisionExhausted(f"level {i} exceeds filtration precision {F.precision}")


def diagonalize_mod(Fs: Sequence[DvrFiltration], i: int, seed: int | None = None) -> ModBasis:
    """Diagonalizing basis for the image filtrations on ``V / t^i V``."""
    if i < 1:
        raise ValueError("level must be positive")
    n = _common_rank(Fs)
    _check_precision(Fs, i)
    table = dvr_graded_table(Fs, seed, mod=i)
    if table.total != n:
        raise NotDiagonalizableMod(table, n, f"graded dimension {table.total} != rank {n} modulo t^{i}")
    vecs, ords = _table_basis(table)
    vecs = [truncate_vec(v, i) for v in vecs]
    if not verify_mod(vecs, Fs, i):
        raise AssertionError("graded lift failed to diagonalize modulo t^i")
    return ModBasis(i, tuple(vecs), tuple(ords))


def verify_mod(vectors: Sequence[Iterable], Fs: Sequence[DvrFiltration], i: int) -> bool:
    """Span identities for the image filtrations on ``V / t^i V``."""
    n = _common_rank(Fs)
    vecs = [as_polyvec(v) for v in vectors]
    _require_basis(vecs, n)
    return all(_span_identity_holds(F, vecs, i) for F in Fs)


def constraint_matrix(orders: Sequence[Sequence[object]]) -> list[list[int]]:
    """Divisibility exponents of the stabilizer of a diagonal frame.

    ``orders[a][alpha]`` is the order of basis vector ``a`` for filtration
    ``alpha``.  An automorphism with matrix ``g`` in that basis (column ``b``
    holds the image of vector ``b``) preserves every filtration iff
    ``ord_t g[a][b] >= c[a][b] = max(0, max_alpha ceil(m[b][alpha] - m[a][alpha]))``.
    """
    m = [[frac(x) for x in row] for row in orders]
    n = len(m)
    return [[max(0, max((math.ceil(m[b][k] - m[a][k]) for k in range(len(m[a]))), default=0)) for b in range(n)]
            for a in range(n)]


def _mat_inverse(cols: Sequence[PolyVec], level: int) -> list[list[Poly]]:
    """Inverse over ``R/t^level`` of the matrix whose columns are ``cols``."""
    n = len(cols)
    a = [[_truncate_poly(cols[c][r], level) for c in range(n)] + [((Fraction(1),) if r == c else ()) for c in range(n)]
         for r in range(n)]
    for c in range(n):
        p = next((r for r in range(c, n) if a[r][c] and a[r][c][0]), None)
        if p is None:
            raise NotABasis("matrix is not invertible modulo t")
        a[c], a[p] = a[p], a[c]
        inv = _poly_inv(a[c][c], level)
        a[c] = [_poly_mul(x, inv, level) for x in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [as_poly(_poly_add(x, _poly_scale(_poly_mul(f, y, level), Fraction(-1)))[:level])
                        for x, y in zip(a[r], a[c])]
    return [row[n:] for row in a]


def _mat_mul(a: Sequence[Sequence[Poly]], b: Sequence[Sequence[Poly]], level: int) -> list[list[Poly]]:
    n, m, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc: Poly = ()
            for k in range(m):
                acc = _poly_add(acc, _poly_mul(a[i][k], b[k][j], level))
            row.append(_truncate_poly(acc, level))
        out.append(row)
    return out


def _cols_to_rows(cols: Sequence[PolyVec]) -> list[list[Poly]]:
    n = len(cols[0])
    return [[cols[c][r] for c in range(len(cols))] for r in range(n)]


def _rows_to_cols(rows: Sequence[Sequence[Poly]]) -> tuple[PolyVec, ...]:
    return tuple(tuple(rows[r][c] for r in range(len(rows))) for c in range(len(rows[0])))


def transition_matrix(b: ModBasis, c: ModBasis) -> list[list[Poly]]:
    """``g`` over ``R/t^i`` with ``b_j = sum_a g[a][j] c_a`` (``i = b.level``)."""
    i = b.level
    cinv = _mat_inverse([truncate_vec(v, i) for v in c.vectors], i)
    return _mat_mul(cinv, _cols_to_rows([truncate_vec(v, i) for v in b.vectors]), i)


def torsor_transfer(b_i: ModBasis, c_next: ModBasis, constraints: Sequence[Sequence[int]]) -> ModBasis:
    """Move ``c_next`` so that it reduces to ``b_i``.

    Solves ``b_i = g_i . (c_next mod t^i)``, checks ``g_i`` against the
    divisibility constraints, lifts it coefficientwise and applies it to
    ``c_next``.
    """
    i = b_i.level
    if c_next.level != i + 1:
        raise ValueError(f"expected a level-{i + 1} basis, got level {c_next.level}")
    g = transition_matrix(b_i, c_next)
    n = len(g)
    for a in range(n):
        for bb in range(n):
            need = min(constraints[a][bb], i)
            o = poly_ord(g[a][bb])
            if o is not None and o < need:
                raise NotInTorsor(f"entry ({a},{bb}) has t-order {o} < {need}")
    lifted = _mat_mul(_cols_to_rows(c_next.vectors), g, i + 1)
    return ModBasis(i + 1, _rows_to_cols(lifted), c_next.ord_vectors)


def _align(c: ModBasis, ords: Sequence[tuple]) -> ModBasis:
    """Reorder ``c`` so its order vectors follow ``ords``."""
    pool = list(range(len(c.vectors)))
    order = []
    for o in ords:
        k = next((k for k in pool if c.ord_vectors[k] == o), None)
        if k is None:
            raise NotInTorsor("bases at consecutive levels have different order multisets")
        pool.remove(k)
        order.append(k)
    return ModBasis(c.level, tuple(c.vectors[k] for k in order), tuple(c.ord_vectors[k] for k in order))


def lift_chain(oracle: Callable[[int], ModBasis], N: int) -> ModBasis:
    """One basis at level ``N`` whose truncations diagonalize at every level."""
    if N < 1:
        raise ValueError("target level must be positive")
    b = oracle(1)
    for i in range(1, N):
        c = _align(oracle(i + 1), b.ord_vectors)
        b = torsor_transfer(b, c, constraint_matrix(b.ord_vectors))
    return b
