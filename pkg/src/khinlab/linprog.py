"""Small exact linear programs over the rationals.

Two-phase primal simplex with Bland's rule on dense Fraction tableaus.
Problem shape: minimize c.x subject to A x <= b with box bounds per
variable.  Everything here is desk-scale (tens of variables), chosen for
exactness rather than speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConfigError
from .exactnum import as_scalar


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal", "infeasible", "unbounded"
    value: Fraction | None
    x: tuple[Fraction, ...] | None


def solve_lp(
    c: Sequence,
    a_ub: Sequence[Sequence],
    b_ub: Sequence,
    bounds: Sequence[tuple[object, object]],
) -> LpSolution:
    """Minimize c.x st a_ub x <= b_ub and lo_i <= x_i <= hi_i.

    Bounds must be finite; shift to nonnegative variables internally.
    """
    n = len(c)
    c = [as_scalar(v) for v in c]
    rows = [[as_scalar(v) for v in row] for row in a_ub]
    rhs = [as_scalar(v) for v in b_ub]
    if any(len(row) != n for row in rows) or len(rhs) != len(rows):
        raise ConfigError("LP shape mismatch")
    lows = [as_scalar(lo) for lo, _ in bounds]
    highs = [as_scalar(hi) for _, hi in bounds]
    if len(bounds) != n or any(lo > hi for lo, hi in zip(lows, highs)):
        raise ConfigError("bad LP bounds")

    # Substitute x = lo + y, 0 <= y <= hi - lo; fold upper bounds into rows.
    shifted_rhs = [
        r - sum((row[j] * lows[j] for j in range(n)), Fraction(0))
        for row, r in zip(rows, rhs)
    ]
    for j in range(n):
        span = highs[j] - lows[j]
        row = [Fraction(0)] * n
        row[j] = Fraction(1)
        rows.append(row)
        shifted_rhs.append(span)
    offset = sum((c[j] * lows[j] for j in range(n)), Fraction(0))

    tableau, basis = _phase_one(rows, shifted_rhs, n)
    if tableau is None:
        return LpSolution("infeasible", None, None)
    status, value, y = _phase_two(tableau, basis, c, n)
    if status != "optimal":
        return LpSolution(status, None, None)
    assert value is not None and y is not None
    x = tuple(lows[j] + y[j] for j in range(n))
    return LpSolution("optimal", value + offset, x)


def _phase_one(rows, rhs, n):
    """Slack + artificial start; returns (tableau, basis) or (None, None)."""
    m = len(rows)
    width = n + m + m  # structurals, slacks, artificials
    tableau = []
    basis = []
    for i in range(m):
        row = rows[i] + [Fraction(0)] * (m + m) + [rhs[i]]
        row[n + i] = Fraction(1)
        if rhs[i] < 0:
            row = [-v for v in row[:-1]] + [-row[-1]]
        row[n + m + i] = Fraction(1)
        tableau.append(row)
        basis.append(n + m + i)
    objective = [Fraction(0)] * (width + 1)
    for i in range(m):
        for j in range(width + 1):
            objective[j] -= tableau[i][j]
    for i in range(m):
        objective[n + m + i] = Fraction(0)
    tableau.append(objective)
    _simplex(tableau, basis, blocked=set())
    if -tableau[-1][-1] != 0:
        return None, None
    # Drive any artificial variables out of the basis, then drop them.
    for i, bv in enumerate(basis):
        if bv >= n + m:
            pivot_col = next(
                (j for j in range(n + m) if tableau[i][j] != 0), None
            )
            if pivot_col is None:
                continue  # redundant row
            _pivot(tableau, basis, i, pivot_col)
    trimmed = [row[: n + m] + [row[-1]] for row in tableau[:-1]]
    return (trimmed, basis)


def _phase_two(tableau, basis, c, n):
    m = len(tableau)
    width = len(tableau[0]) - 1
    objective = [Fraction(0)] * (width + 1)
    for j in range(n):
        objective[j] = c[j]
    for i, bv in enumerate(basis):
        if bv >= n + m:
            continue
        coeff = objective[bv]
        if coeff != 0:
            for j in range(width + 1):
                objective[j] -= coeff * tableau[i][j]
    tableau = tableau + [objective]
    bounded = _simplex(tableau, basis, blocked=set())
    if not bounded:
        return "unbounded", None, None
    y = [Fraction(0)] * n
    for i, bv in enumerate(basis):
        if bv < n:
            y[bv] = tableau[i][-1]
    return "optimal", -tableau[-1][-1], y


def _simplex(tableau, basis, blocked) -> bool:
    m = len(tableau) - 1
    width = len(tableau[0]) - 1
    while True:
        obj = tableau[-1]
        entering = next(
            (j for j in range(width) if j not in blocked and obj[j] < 0), None
        )
        if entering is None:
            return True
        ratio = None
        leaving = None
        for i in range(m):
            coeff = tableau[i][entering]
            if coeff > 0:
                r = tableau[i][-1] / coeff
                # Bland: smallest ratio, ties to the lowest basis index.
                if ratio is None or r < ratio or (r == ratio and basis[i] < basis[leaving]):
                    ratio, leaving = r, i
        if leaving is None:
            return False
        _pivot(tableau, basis, leaving, entering)


def _pivot(tableau, basis, row, col) -> None:
    inv = 1 / tableau[row][col]
    tableau[row] = [v * inv for v in tableau[row]]
    for i, r in enumerate(tableau):
        if i != row and r[col] != 0:
            factor = r[col]
            tableau[i] = [v - factor * p for v, p in zip(r, tableau[row])]
    basis[row] = col
