"""Independent reference computations used to cross-check the package.

Nothing here imports the package: these routines work on plain lists of
Fractions so that agreement with the library is a real check.
"""

from __future__ import annotations

from fractions import Fraction


# -- Smith normal form over Q[t]/t^N ----------------------------------------------


def _order(p: list[Fraction]) -> int | None:
    for k, c in enumerate(p):
        if c:
            return k
    return None


def _mul(a: list[Fraction], b: list[Fraction], N: int) -> list[Fraction]:
    out = [Fraction(0)] * N
    for i, x in enumerate(a):
        if x:
            for j in range(N - i):
                out[i + j] += x * b[j]
    return out


def _unit_inverse(u: list[Fraction], N: int) -> list[Fraction]:
    inv = [Fraction(0)] * N
    inv[0] = 1 / u[0]
    for k in range(1, N):
        s = sum((u[j] * inv[k - j] for j in range(1, k + 1)), Fraction(0))
        inv[k] = -s / u[0]
    return inv


def _divide(p: list[Fraction], e: int, N: int) -> list[Fraction]:
    """``p / t^e`` for ``p`` of order at least ``e`` (high terms padded with 0)."""
    return p[e:] + [Fraction(0)] * e


def elementary_divisors(rows: list[list[list[Fraction]]], n: int, N: int) -> list[int]:
    """Exponents ``e_i`` with ``span(rows) = sum t^{e_i} R`` in ``(Q[t]/t^N)^n``.

    ``rows`` is a list of generators, each a list of ``n`` coefficient lists.
    Exponents of vanishing divisors are reported as ``N``.
    """
    M = [[(list(p) + [Fraction(0)] * N)[:N] for p in row] for row in rows]
    out = []
    for p in range(n):
        best = None
        for i in range(p, len(M)):
            for j in range(p, n):
                e = _order(M[i][j])
                if e is not None and (best is None or e < best[0]):
                    best = (e, i, j)
        if best is None:
            out.extend([N] * (n - p))
            break
        e, i, j = best
        M[p], M[i] = M[i], M[p]
        for row in M:
            row[p], row[j] = row[j], row[p]
        pivot = _divide(M[p][p], e, N)
        inv = _unit_inverse(pivot, N)
        for i in range(len(M)):
            if i != p and _order(M[i][p]) is not None:
                f = _mul(_divide(M[i][p], e, N), inv, N)
                M[i] = [[a - b for a, b in zip(M[i][c], _mul(f, M[p][c], N))] for c in range(n)]
        for c in range(n):
            if c != p and _order(M[p][c]) is not None:
                f = _mul(_divide(M[p][c], e, N), inv, N)
                for row in M:
                    row[c] = [a - b for a, b in zip(row[c], _mul(f, row[p], N))]
        out.append(e)
    return sorted(out)


# -- two-dimensional flags --------------------------------------------------------


def same_line(u, v) -> bool:
    return u[0] * v[1] - u[1] * v[0] == 0


def distinct_lines(lines) -> int:
    seen: list = []
    for v in lines:
        if not any(same_line(v, w) for w in seen):
            seen.append(v)
    return len(seen)


def plane_flags_diagonalizable(lines) -> bool:
    """Flags on Q^2 split simultaneously iff their middle lines take at most two values."""
    return distinct_lines([v for v in lines if v is not None]) <= 2
