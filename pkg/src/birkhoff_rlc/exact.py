"""Exact rational matrix routines on lists of :class:`fractions.Fraction`.

Matrices are plain row-major ``list[list[Fraction]]``; sizes here are tens of
rows at most, so clarity beats speed.  Pivoting is always by lowest column
index so results are reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Matrix = list[list[Fraction]]


def to_fractions(rows: Iterable[Iterable]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def shape(a: Sequence[Sequence]) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else 0)


def transpose(a: Matrix) -> Matrix:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def rref(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    m = [list(row) for row in a]
    n_rows, n_cols = shape(m)
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        p = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1]) if a and a[0] else 0


def nullspace(a: Matrix, n_cols: int | None = None) -> list[list[Fraction]]:
    """Basis of ``{x : a x = 0}``, one vector per free column (free entry = 1)."""
    if n_cols is None:
        n_cols = shape(a)[1]
    if not a:
        return [[Fraction(int(i == j)) for i in range(n_cols)] for j in range(n_cols)]
    r, pivots = rref(a)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for row, pc in zip(r, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def det(a: Matrix) -> Fraction:
    m = [list(row) for row in a]
    n = len(m)
    result = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            result = -result
        result *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return result


def solve(a: Matrix, b: Matrix) -> Matrix | None:
    """Exact solution X of ``a X = b`` when ``a`` has full column rank.

    Returns ``None`` when the system is inconsistent.  Raises ``ValueError``
    if ``a`` is column-rank deficient (the solution would not be unique).
    """
    n_rows, n_cols = shape(a)
    k = shape(b)[1]
    aug = [list(ra) + list(rb) for ra, rb in zip(a, b)]
    r, pivots = rref(aug)
    if any(p >= n_cols for p in pivots):
        return None
    if len(pivots) < n_cols:
        raise ValueError("matrix is column-rank deficient")
    return [[r[i][n_cols + j] for j in range(k)] for i in range(n_cols)]


def same_column_space(a: Matrix, b: Matrix) -> bool:
    ra, rb = rank(a), rank(b)
    if ra != rb:
        return False
    stacked = [list(x) + list(y) for x, y in zip(a, b)]
    return rank(stacked) == ra


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
