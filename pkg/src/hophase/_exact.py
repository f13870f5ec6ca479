"""Exact rational linear solves for tiny dense systems.

Finite-difference weights and Hermite-bridge coefficients come from small
(<= 10 x 10) linear systems with rational entries. Solving them in exact
arithmetic keeps the algebraic identities (weights annihilate low-degree
polynomials, bridge energy is an exact quadratic form) true to the last bit
before the single final rounding to float.
"""

from __future__ import annotations

from fractions import Fraction


def solve_rational(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve a @ x = b by Gaussian elimination over the rationals.

    `a` is modified in place; raises ZeroDivisionError on a singular matrix.
    """
    n = len(a)
    rows = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        pv = rows[col][col]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col] / pv
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] / rows[i][i] for i in range(n)]
