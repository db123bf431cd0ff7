"""
Monomial valuations on Laurent data and the filtrations they induce.

A monomial valuation with weight vector ``w`` sends
``sum c[k, beta] t^k x^beta`` to ``min(k + <w, beta>)`` over the nonzero terms,
so ``v(t) = 1``.  Vertex data (:class:`DivisorData`) keeps the raw weights of
``ord_E`` together with the multiplicity ``b``; the normalized valuation is
``ord_E / b``.  Every valuation passed around after construction is the
normalized one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .arith import AbovePrecision, LaurentPoly, frac
from .errors import (
    DimensionMismatch,
    IncidenceViolation,
    InvariantViolation,
    NotIndependent,
    PrecisionExhausted,
    VariableMismatch,
)
from .linfield import nullspace, rref
from .lindvr import DvrFiltration, PolyVec, Submodule, as_polyvec

_ZERO = Fraction(0)


@dataclass(frozen=True)
class MonomialValuation:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(frac(w) for w in self.weights))

    @property
    def t_weight(self) -> Fraction:
        return Fraction(1)

    def term_value(self, k: int, beta: Sequence[int]) -> Fraction:
        return k + sum((w * b for w, b in zip(self.weights, beta)), _ZERO)

    def __call__(self, f: LaurentPoly):
        return eval_valuation(self, f)


@dataclass(frozen=True)
class DivisorData:
    label: str
    weights: tuple[Fraction, ...]
    b: int = 1
    A: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(frac(w) for w in self.weights))
        object.__setattr__(self, "A", frac(self.A))
        if int(self.b) != self.b or self.b < 1:
            raise InvariantViolation(f"divisor {self.label!r}: multiplicity must be a positive integer, got {self.b}")
        object.__setattr__(self, "b", int(self.b))
        if self.A < 0:
            raise InvariantViolation(f"divisor {self.label!r}: log discrepancy must be >= 0, got {self.A}")

    def valuation(self) -> MonomialValuation:
        """The normalized vertex valuation ``ord_E / b``."""
        return MonomialValuation(tuple(w / self.b for w in self.weights))


def eval_valuation(v: MonomialValuation, f: LaurentPoly) -> Fraction | AbovePrecision:
    if len(v.weights) != f.num_vars:
        raise VariableMismatch(f"valuation on {len(v.weights)} variables applied to {f.num_vars}")
    if f.is_zero():
        return AbovePrecision(f.precision)
    return min(v.term_value(k, beta) for k, beta in f.terms)


# -- log discrepancy and skeleton membership ----------------------------------


def _check_support(alpha: Sequence, simplices: Iterable[Iterable[int]] | None) -> None:
    if simplices is None:
        return
    support = {j for j, a in enumerate(alpha) if a}
    if not support:
        return
    if not any(support <= set(s) for s in simplices):
        raise IncidenceViolation(f"divisors {sorted(support)} are not declared to meet")


def log_discrepancy_on_cone(divisors: Sequence[DivisorData], alpha: Sequence,
                            simplices: Iterable[Iterable[int]] | None = None) -> Fraction:
    """``sum alpha_j A_j`` for ``alpha`` on a cone of meeting divisors.

    With ``simplices`` given, the support of ``alpha`` must lie in one of them.
    """
    alpha = [frac(a) for a in alpha]
    if len(alpha) != len(divisors):
        raise DimensionMismatch(f"{len(alpha)} coordinates for {len(divisors)} divisors")
    if any(a < 0 for a in alpha):
        raise ValueError("cone coordinates must be non-negative")
    _check_support(alpha, simplices)
    return sum((a * d.A for a, d in zip(alpha, divisors)), _ZERO)


def skeleton_membership(divisors: Sequence[DivisorData], alpha: Sequence,
                        simplices: Iterable[Iterable[int]] | None = None) -> bool:
    alpha = [frac(a) for a in alpha]
    if log_discrepancy_on_cone(divisors, alpha, simplices) != 0:
        return False
    return sum((a * d.b for a, d in zip(alpha, divisors)), _ZERO) == 1


def vertical_shift(divisors: Sequence[DivisorData], alpha: Sequence, D: Mapping[str, int]) -> Fraction:
    """Value of the vertical divisor ``sum D_j E_j`` at the point with cone coordinates ``alpha``."""
    alpha = [frac(a) for a in alpha]
    norm = sum((a * d.b for a, d in zip(alpha, divisors)), _ZERO)
    if norm == 0:
        raise ValueError("point has zero weight")
    return sum((a * int(D.get(d.label, 0)) for a, d in zip(alpha, divisors)), _ZERO) / norm


def metric_shift(values: Mapping, points: Mapping, divisors: Sequence[DivisorData], D: Mapping[str, int]) -> dict:
    """Shift ``values[key]`` by the vertical divisor ``D`` evaluated at ``points[key]``."""
    return {key: val + vertical_shift(divisors, points[key], D) for key, val in values.items()}


# -- section spaces ----------------------------------------------------------


def _rank_over_rational_functions(sections: Sequence[LaurentPoly]) -> int:
    """Rank of the sections over Q(t), by exact evaluation at enough t-values."""
    if not sections:
        return 0
    betas = sorted(set().union(*(s.support() for s in sections)))
    deg = max((k for s in sections for k, _ in s.terms), default=0)
    samples = len(sections) * max(deg, 0) + 1
    best = 0
    for t0 in range(samples):
        rows = []
        for s in sections:
            row = [_ZERO] * len(betas)
            for (k, beta), c in s.terms.items():
                row[betas.index(beta)] += c * Fraction(t0) ** k
            rows.append(row)
        best = max(best, len(rref(rows, len(betas))[0]))
        if best == len(sections):
            break
    return best


class SectionSpace:
    """Free R-module spanned by independent sections, with coordinates in ``R^rank``."""

    def __init__(self, sections: Sequence[LaurentPoly], variables: Sequence[str] | None = None):
        sections = list(sections)
        if not sections:
            raise ValueError("a section space needs at least one section")
        n = sections[0].num_vars
        for s in sections:
            if s.num_vars != n:
                raise VariableMismatch("sections use different numbers of variables")
            if s.is_zero():
                raise NotIndependent("zero section")
            if any(k < 0 for k, _ in s.terms):
                raise InvariantViolation("sections must have non-negative t-degrees")
        if _rank_over_rational_functions(sections) < len(sections):
            raise NotIndependent(f"{len(sections)} sections are linearly dependent")
        self.sections = tuple(sections)
        self.num_vars = n
        self.variables = tuple(variables) if variables is not None else None
        self.precision = min(s.precision for s in sections)
        self.support = sorted(set().union(*(s.support() for s in sections)))

    @property
    def rank(self) -> int:
        return len(self.sections)

    def combination(self, coeffs: Sequence) -> LaurentPoly:
        """``sum a_i s_i`` for polynomial coefficient vectors ``a_i``."""
        vec = as_polyvec(coeffs)
        if len(vec) != self.rank:
            raise DimensionMismatch(f"{len(vec)} coefficients for rank {self.rank}")
        out = LaurentPoly.zero(self.num_vars, self.precision)
        for a, s in zip(vec, self.sections):
            if a:
                out = out + s.series_mul(list(a))
        return out

    def coordinates(self, f: LaurentPoly, level: int | None = None) -> PolyVec:
        """Coefficient vector of ``f`` modulo ``t^level`` (default: the precision)."""
        if f.num_vars != self.num_vars:
            raise VariableMismatch("section has the wrong number of variables")
        L = self.precision if level is None else level
        betas = sorted(set(self.support) | f.support())
        r = self.rank
        nunk = r * L
        rows = []
        for k in range(L):
            for beta in betas:
                row = [_ZERO] * (nunk + 1)
                for i, s in enumerate(self.sections):
                    for (ks, bs), c in s.terms.items():
                        if bs == beta and ks <= k:
                            row[i * L + (k - ks)] += c
                row[nunk] = -f.coefficient(k, beta)
                if any(row):
                    rows.append(row)
        # the last column carries -f, so solutions have last entry 1
        sol = next((v for v in nullspace(rows, nunk + 1) if v[nunk]), None)
        if sol is None:
            raise NotIndependent(f"{f} is not in the span of the sections modulo t^{L}")
        flat = [x / sol[nunk] for x in sol[:nunk]]
        return as_polyvec(tuple(flat[i * L:(i + 1) * L]) for i in range(r))


# -- induced filtrations -----------------------------------------------------


def _coeff_table(V: SectionSpace) -> dict:
    table: dict = {}
    for i, s in enumerate(V.sections):
        for (k, beta), c in s.terms.items():
            table.setdefault(beta, {}).setdefault(i, {})[k] = c
    return table


def filtration_step(v: MonomialValuation, V: SectionSpace, lam) -> Submodule:
    """``{a in R^rank : v(sum a_i s_i) >= lam}`` as a submodule."""
    lam = frac(lam)
    r = V.rank
    vmin = min(eval_valuation(v, s) for s in V.sections)
    P = max(0, math.ceil(lam - vmin))
    if P == 0:
        return Submodule.full(r)
    rows = []
    for beta, per_section in _coeff_table(V).items():
        e = math.ceil(lam - v.term_value(0, beta))
        if e > V.precision:
            raise PrecisionExhausted(
                f"order {lam} needs t-coefficients up to degree {e - 1} but sections are known modulo t^{V.precision}"
            )
        for k in range(e):
            row = [_ZERO] * (r * P)
            for i, coeffs in per_section.items():
                for ks, c in coeffs.items():
                    m = k - ks
                    if 0 <= m < P:
                        row[i * P + m] += c
            if any(row):
                rows.append(row)
    return Submodule._make(r, P, nullspace(rows, r * P))


def _grid_offsets(v: MonomialValuation, V: SectionSpace) -> set[Fraction]:
    return {v.term_value(0, beta) % 1 for beta in V.support}


def induced_filtration_single(v: MonomialValuation, V: SectionSpace, offset=0) -> DvrFiltration:
    """The filtration ``lam -> {s : v(s) >= lam}`` on ``V``, optionally shifted by ``offset``."""
    r = V.rank
    vmin = min(eval_valuation(v, s) for s in V.sections)
    offsets = _grid_offsets(v, V)
    d = 1
    for o in offsets:
        d = d * o.denominator // math.gcd(d, o.denominator)
    tV = Submodule.t_power(r, 1)
    steps = []
    lam = vmin
    cap = vmin + V.precision + 1
    while True:
        lam += Fraction(1, d)
        if lam % 1 not in offsets:
            continue
        if lam > cap:
            raise PrecisionExhausted("induced filtration does not settle within the section precision")
        step = filtration_step(v, V, lam)
        steps.append((lam, step))
        if step.issubmodule(tV):
            break
    F = DvrFiltration(r, tuple(steps), vmin, precision=V.precision)
    offset = frac(offset)
    return F.shift(offset) if offset else F


def induced_filtration(vs: Iterable, V: SectionSpace, offsets: Sequence | None = None) -> list[DvrFiltration]:
    """One filtration per valuation; items may be valuations or ``(DivisorData, valuation)`` pairs."""
    vals = [item[1] if isinstance(item, tuple) else item for item in vs]
    if offsets is None:
        offsets = [0] * len(vals)
    return [induced_filtration_single(v, V, o) for v, o in zip(vals, offsets)]


def section_ord(F: DvrFiltration, V: SectionSpace, f: LaurentPoly):
    """Order of a section of ``V`` for a filtration on its coordinate module."""
    return F.ord(V.coordinates(f))
