r"""
Exact scalar and polynomial arithmetic.

Scalars are :class:`fractions.Fraction`.  Two carriers sit on top of them:

- :class:`TruncatedSeries`, an element of `\QQ[[t]]/t^N` with its precision
  `N` tracked explicitly;
- :class:`LaurentPoly`, a finite sum `\sum c_{k,\beta} t^k x^\beta` with
  `\beta \in \ZZ^n`, used for sections on a torus chart.

A series that vanishes modulo `t^N` has no order; :func:`ord_t` reports
:class:`AbovePrecision` for it instead of pretending it is exactly zero.

EXAMPLES::

    >>> from reesdiag.arith import LaurentPoly, ord_t, TruncatedSeries
    >>> f = LaurentPoly.parse("1 + t*x", ["x"], precision=8)
    >>> g = LaurentPoly.parse("1 - t*x", ["x"], precision=8)
    >>> str(f * g)
    '1 - t^2*x^2'
    >>> ord_t(TruncatedSeries({2: 1, 5: 3}, 8))
    2
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, PrecisionIncrease, VariableMismatch

MAX_VARS = 8

Exponent = tuple[int, ...]
TermKey = tuple[int, Exponent]


def frac(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class AbovePrecision:
    """Order of a series that is zero modulo ``t^precision``."""

    precision: int

    def __str__(self) -> str:
        return f">={self.precision}"


class TruncatedSeries:
    """An element of ``Q[[t]] / t^N``.

    Stored sparsely; degrees are always below the precision and no zero
    coefficient is stored.
    """

    __slots__ = ("_coeffs", "_precision")

    def __init__(self, coeffs: Mapping[int, object] | Sequence[object] = (), precision: int = 1):
        if precision < 1:
            raise ValueError("precision must be positive")
        items = coeffs.items() if isinstance(coeffs, Mapping) else enumerate(coeffs)
        clean: dict[int, Fraction] = {}
        for k, c in items:
            if k < 0:
                raise ValueError("truncated series have non-negative degrees")
            c = frac(c)
            if c and k < precision:
                clean[k] = c
        self._coeffs = clean
        self._precision = precision

    @property
    def precision(self) -> int:
        return self._precision

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._coeffs)

    def __getitem__(self, k: int) -> Fraction:
        return self._coeffs.get(k, Fraction(0))

    def dense(self) -> tuple[Fraction, ...]:
        return tuple(self[k] for k in range(self._precision))

    @classmethod
    def one(cls, precision: int) -> TruncatedSeries:
        return cls({0: 1}, precision)

    @classmethod
    def monomial(cls, k: int, precision: int, c=1) -> TruncatedSeries:
        return cls({k: c}, precision)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_unit(self) -> bool:
        return 0 in self._coeffs

    def _check(self, other: TruncatedSeries) -> int:
        return min(self._precision, other._precision)

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries({0: frac(other)}, self._precision)
        n = self._check(other)
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out.get(k, 0) + c
        return TruncatedSeries(out, n)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries({k: -c for k, c in self._coeffs.items()}, self._precision)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TruncatedSeries) else -frac(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            c = frac(other)
            return TruncatedSeries({k: c * a for k, a in self._coeffs.items()}, self._precision)
        n = self._check(other)
        out: dict[int, Fraction] = {}
        for i, a in self._coeffs.items():
            for j, b in other._coeffs.items():
                if i + j < n:
                    out[i + j] = out.get(i + j, 0) + a * b
        return TruncatedSeries(out, n)

    __rmul__ = __mul__

    def shift(self, k: int) -> TruncatedSeries:
        """Multiply by ``t^k`` (same precision)."""
        return TruncatedSeries({i + k: c for i, c in self._coeffs.items()}, self._precision)

    def inverse(self) -> TruncatedSeries:
        if not self.is_unit():
            raise ZeroDivisionError("series is not a unit")
        n = self._precision
        a = self.dense()
        inv = [Fraction(0)] * n
        inv[0] = 1 / a[0]
        for k in range(1, n):
            s = sum((a[j] * inv[k - j] for j in range(1, k + 1)), Fraction(0))
            inv[k] = -s * inv[0]
        return TruncatedSeries(inv, n)

    def truncate(self, m: int) -> TruncatedSeries:
        if m > self._precision:
            raise PrecisionIncrease(f"cannot raise precision {self._precision} to {m}")
        return TruncatedSeries(self._coeffs, m)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self._precision == other._precision and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self._precision, tuple(sorted(self._coeffs.items()))))

    def __repr__(self):
        body = " + ".join(f"{format_frac(c)}*t^{k}" for k, c in sorted(self._coeffs.items())) or "0"
        return f"TruncatedSeries({body}, N={self._precision})"


def ord_t(f: TruncatedSeries) -> int | AbovePrecision:
    """Smallest degree with a nonzero coefficient, or ``AbovePrecision``."""
    if f.is_zero():
        return AbovePrecision(f.precision)
    return min(f.coeffs)


class LaurentPoly:
    r"""
    A finite Laurent polynomial `\sum c_{k,\beta} t^k x^\beta` over `\QQ`.

    ``precision`` is the t-adic precision: terms with `k \ge N` are dropped.
    Torus exponents are integer tuples of length ``num_vars`` (at most 8).
    """

    __slots__ = ("_terms", "_num_vars", "_precision")

    def __init__(self, terms: Mapping[TermKey, object], num_vars: int, precision: int):
        if not 0 <= num_vars <= MAX_VARS:
            raise ValueError(f"between 0 and {MAX_VARS} torus variables are supported")
        if precision < 1:
            raise ValueError("precision must be positive")
        clean: dict[TermKey, Fraction] = {}
        for (k, beta), c in terms.items():
            beta = tuple(int(b) for b in beta)
            if len(beta) != num_vars:
                raise VariableMismatch(f"exponent {beta} has wrong length for {num_vars} variables")
            c = frac(c)
            if c and k < precision:
                key = (int(k), beta)
                clean[key] = clean.get(key, 0) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean
        self._num_vars = num_vars
        self._precision = precision

    # construction ---------------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int, precision: int) -> LaurentPoly:
        return cls({}, num_vars, precision)

    @classmethod
    def monomial(cls, beta: Iterable[int], precision: int, k: int = 0, c=1) -> LaurentPoly:
        beta = tuple(beta)
        return cls({(k, beta): c}, len(beta), precision)

    @classmethod
    def constant(cls, c, num_vars: int, precision: int) -> LaurentPoly:
        return cls({(0, (0,) * num_vars): c}, num_vars, precision)

    @classmethod
    def parse(cls, text: str, variables: Sequence[str], precision: int) -> LaurentPoly:
        """Parse ``"1 + t*x - 1/2*x^-1*y^2"`` style input.

        The letter ``t`` is reserved for the uniformizer.  Parsing is
        delegated to sympy; exponents must be integers and coefficients
        rational.
        """
        import sympy

        if "t" in variables:
            raise ParseError("'t' is reserved for the uniformizer")
        if len(set(variables)) != len(variables):
            raise ParseError("duplicate variable names")
        syms = {name: sympy.Symbol(name) for name in [*variables, "t"]}
        source = text.replace("^", "**")
        if re.search(r"[^\w\s\*\+\-/\(\)\.]", source):
            raise ParseError(f"unexpected character in {text!r}")
        try:
            expr = sympy.expand(sympy.parse_expr(source, local_dict=syms, evaluate=True))
        except Exception as exc:  # sympy raises a zoo of types
            raise ParseError(f"cannot parse {text!r}: {exc}") from exc
        unknown = expr.free_symbols - set(syms.values())
        if unknown:
            raise ParseError(f"unknown symbols {sorted(map(str, unknown))} in {text!r}")
        terms: dict[TermKey, Fraction] = {}
        for term in sympy.Add.make_args(expr):
            if term == 0:
                continue
            coeff, rest = term.as_coeff_Mul()
            if not coeff.is_Rational:
                raise ParseError(f"non-rational coefficient in {text!r}")
            powers = rest.as_powers_dict() if rest != 1 else {}
            exps = {}
            for base, e in powers.items():
                if base not in syms.values() or not e.is_Integer:
                    raise ParseError(f"term {term} of {text!r} is not a Laurent monomial")
                exps[str(base)] = int(e)
            k = exps.pop("t", 0)
            beta = tuple(exps.get(name, 0) for name in variables)
            key = (k, beta)
            terms[key] = terms.get(key, 0) + Fraction(int(coeff.p), int(coeff.q))
        return cls(terms, len(variables), precision)

    # accessors ------------------------------------------------------------

    @property
    def terms(self) -> dict[TermKey, Fraction]:
        return dict(self._terms)

    @property
    def num_vars(self) -> int:
        return self._num_vars

    @property
    def precision(self) -> int:
        return self._precision

    def is_zero(self) -> bool:
        return not self._terms

    def support(self) -> set[Exponent]:
        return {beta for _, beta in self._terms}

    def t_min(self) -> int | AbovePrecision:
        if not self._terms:
            return AbovePrecision(self._precision)
        return min(k for k, _ in self._terms)

    def coefficient(self, k: int, beta: Exponent) -> Fraction:
        return self._terms.get((k, tuple(beta)), Fraction(0))

    # arithmetic -----------------------------------------------------------

    def _compatible(self, other: LaurentPoly) -> int:
        if self._num_vars != other._num_vars:
            raise VariableMismatch(f"{self._num_vars} vs {other._num_vars} variables")
        return min(self._precision, other._precision)

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(frac(other), self._num_vars, self._precision)
        n = self._compatible(other)
        out = dict(self._terms)
        for key, c in other._terms.items():
            out[key] = out.get(key, 0) + c
        return LaurentPoly(out, self._num_vars, n)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({key: -c for key, c in self._terms.items()}, self._num_vars, self._precision)

    def __sub__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(frac(other), self._num_vars, self._precision)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentPoly):
            return laurent_mul(self, other)
        c = frac(other)
        return LaurentPoly({key: c * a for key, a in self._terms.items()}, self._num_vars, self._precision)

    __rmul__ = __mul__

    def t_shift(self, k: int) -> LaurentPoly:
        """Multiply by ``t^k``; precision is unchanged, so high terms may drop."""
        return LaurentPoly({(i + k, b): c for (i, b), c in self._terms.items()}, self._num_vars, self._precision)

    def series_mul(self, a: TruncatedSeries | Sequence[Fraction]) -> LaurentPoly:
        """Multiply by an element of R given by its coefficients in ``t``."""
        coeffs = a.coeffs.items() if isinstance(a, TruncatedSeries) else enumerate(a)
        out: dict[TermKey, Fraction] = {}
        for m, am in coeffs:
            if not am:
                continue
            for (k, beta), c in self._terms.items():
                key = (k + m, beta)
                out[key] = out.get(key, 0) + am * c
        return LaurentPoly(out, self._num_vars, self._precision)

    def with_precision(self, n: int) -> LaurentPoly:
        return LaurentPoly(self._terms, self._num_vars, n)

    def add_variable(self, exponent: int) -> LaurentPoly:
        """Append one torus variable carrying the given exponent in every term."""
        return LaurentPoly(
            {(k, beta + (exponent,)): c for (k, beta), c in self._terms.items()},
            self._num_vars + 1,
            self._precision,
        )

    def truncate(self, m: int) -> LaurentPoly:
        return truncate(self, m)

    # comparison / display -------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return (
            self._num_vars == other._num_vars
            and self._precision == other._precision
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self._num_vars, self._precision, tuple(sorted(self._terms.items()))))

    def to_string(self, variables: Sequence[str] | None = None) -> str:
        if variables is None:
            variables = default_names(self._num_vars)
        if not self._terms:
            return "0"
        pieces = []
        for (k, beta), c in sorted(self._terms.items()):
            factors = []
            if k:
                factors.append("t" if k == 1 else f"t^{k}")
            for name, e in zip(variables, beta):
                if e:
                    factors.append(name if e == 1 else f"{name}^{e}")
            mag = abs(c)
            if not factors:
                body = format_frac(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = format_frac(mag) + "*" + "*".join(factors)
            pieces.append(("-" if c < 0 else "+", body))
        sign, body = pieces[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"LaurentPoly({self.to_string()!r}, n={self._num_vars}, N={self._precision})"


def default_names(n: int) -> list[str]:
    base = ["x", "y", "z", "u", "v", "w", "p", "q"]
    return base[:n]


def laurent_mul(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    """Exact product truncated at the smaller precision."""
    n = f._compatible(g)
    out: dict[TermKey, Fraction] = {}
    for (i, a), c in f._terms.items():
        for (j, b), d in g._terms.items():
            if i + j >= n:
                continue
            key = (i + j, tuple(x + y for x, y in zip(a, b)))
            out[key] = out.get(key, 0) + c * d
    return LaurentPoly(out, f._num_vars, n)


def truncate(f: LaurentPoly, m: int) -> LaurentPoly:
    """Drop every term of t-degree ``>= m``; the precision becomes ``m``."""
    if m > f.precision:
        raise PrecisionIncrease(f"cannot raise precision {f.precision} to {m}")
    return LaurentPoly(f.terms, f.num_vars, m)
