"""Integer subgroups of Z^l: canonical forms, primitivity, representing
multivectors, and exhaustive enumeration by representing-multivector height.

Subgroups are stored by a canonical row Hermite normal form so that
equality of subgroups is equality of dataclasses.  Primitivity is read
off the representing multivector: its coefficients are the maximal
minors of the basis matrix, so a unit coefficient gcd is exactly the
elementary-divisors-all-one condition.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import BudgetError, ConfigError
from .exterior import Multivector, indices_of, wedge_all
from .flows import lambda_embed_multivector  # noqa: F401  (re-exported)

ENUM_BUDGET = 5_000_000  # candidate coefficient tuples per enumeration call


def row_hnf(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row Hermite normal form with positive pivots, entries above each
    pivot reduced into [0, pivot); zero rows dropped."""
    m = [list(map(int, r)) for r in rows]
    if not m:
        return []
    cols = len(m[0])
    if any(len(r) != cols for r in m):
        raise ConfigError("ragged basis matrix")
    pivot_row = 0
    for col in range(cols):
        # gcd out the column below pivot_row via row operations
        piv = None
        for i in range(pivot_row, len(m)):
            if m[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[pivot_row], m[piv] = m[piv], m[pivot_row]
        for i in range(pivot_row + 1, len(m)):
            while m[i][col] != 0:
                q = m[pivot_row][col] // m[i][col]
                m[pivot_row] = [
                    a - q * b for a, b in zip(m[pivot_row], m[i])
                ]
                m[pivot_row], m[i] = m[i], m[pivot_row]
        if m[pivot_row][col] < 0:
            m[pivot_row] = [-v for v in m[pivot_row]]
        for i in range(pivot_row):
            q = m[i][col] // m[pivot_row][col]
            if q:
                m[i] = [a - q * b for a, b in zip(m[i], m[pivot_row])]
        pivot_row += 1
    return [r for r in m[:pivot_row]]


def integer_kernel(matrix: Sequence[Sequence[int]], cols: int) -> list[list[int]]:
    """Basis of {v in Z^cols : matrix @ v = 0}, via HNF of [M^T | I]."""
    rows = len(matrix)
    aug = []
    for j in range(cols):
        left = [int(matrix[i][j]) for i in range(rows)]
        right = [1 if t == j else 0 for t in range(cols)]
        aug.append(left + right)
    reduced = row_hnf(aug)
    kernel = []
    for r in reduced:
        if all(v == 0 for v in r[:rows]):
            kernel.append(r[rows:])
    # HNF keeps zero-left rows only when the combination really kills M.
    return kernel


@dataclass(frozen=True)
class IntegerSubgroup:
    """Rank-k subgroup of Z^ambient_dim, stored by canonical HNF rows."""

    ambient_dim: int
    basis: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.ambient_dim < 1:
            raise ConfigError("ambient dimension must be positive")
        for row in self.basis:
            if len(row) != self.ambient_dim:
                raise ConfigError("basis row length mismatch")

    @classmethod
    def build(cls, ambient_dim: int, rows: Sequence[Sequence[int]]) -> "IntegerSubgroup":
        rows = [list(r) for r in rows]
        canonical = row_hnf(rows)
        if len(canonical) != len(rows):
            raise ConfigError("basis rows are linearly dependent")
        return cls(ambient_dim, tuple(tuple(r) for r in canonical))

    @property
    def rank(self) -> int:
        return len(self.basis)

    def serialize(self) -> str:
        rows = "; ".join(",".join(str(v) for v in r) for r in self.basis)
        return f"ambient {self.ambient_dim}; rank {self.rank}; {rows}"


_SUBGROUP_RE = re.compile(r"^ambient (\d+); rank (\d+);\s*(.*)$")


def parse_subgroup(text: str) -> IntegerSubgroup:
    m = _SUBGROUP_RE.match(text.strip())
    if not m:
        raise ConfigError(f"bad subgroup record: {text!r}")
    ambient, rank = int(m.group(1)), int(m.group(2))
    rows = []
    rest = m.group(3).strip()
    if rest:
        for part in rest.split(";"):
            rows.append([int(v) for v in part.strip().split(",")])
    if len(rows) != rank:
        raise ConfigError("rank does not match row count")
    return IntegerSubgroup.build(ambient, rows)


def representing_multivector(group: IntegerSubgroup) -> Multivector:
    """Wedge of the basis rows; defined up to sign under re-basing."""
    if group.rank == 0:
        raise ConfigError("rank-zero subgroup has no representing multivector")
    return wedge_all(
        [Multivector.from_vector(row) for row in group.basis]
    )


def is_primitive(group: IntegerSubgroup) -> bool:
    """True iff the coefficient gcd of the representing multivector is 1."""
    return representing_multivector(group).content() == 1


def _first_nonzero(values: Sequence[int]) -> int:
    for v in values:
        if v:
            return v
    return 0


def enumerate_primitive_subgroups(
    ambient_dim: int,
    rank: int,
    height: int,
    budget: int = ENUM_BUDGET,
) -> Iterator[IntegerSubgroup]:
    """All primitive rank-k subgroups whose representing multivector has
    sup norm <= height, each exactly once, ordered lexicographically by
    the normalized coefficient tuple of that multivector.

    Candidates are integer coefficient tuples with gcd 1 and positive
    leading coefficient; a tuple survives iff it is decomposable, which
    is read off the rank of the integer kernel of v -> v ^ w.
    """
    if not 1 <= rank <= ambient_dim:
        raise ConfigError("rank out of range")
    if height < 1:
        raise ConfigError("height must be >= 1")
    n_comps = math.comb(ambient_dim, rank)
    total = (2 * height + 1) ** n_comps
    if total > budget:
        raise BudgetError(
            f"enumeration needs {total} candidate tuples, budget {budget}"
        )
    masks = sorted(
        (sum(1 << p for p in combo) for combo in
         itertools.combinations(range(ambient_dim), rank)),
        key=indices_of,
    )
    for coeffs in itertools.product(range(-height, height + 1), repeat=n_comps):
        lead = _first_nonzero(coeffs)
        if lead <= 0:
            continue
        if math.gcd(*coeffs) != 1:
            continue
        w = Multivector(
            ambient_dim, rank, {m: c for m, c in zip(masks, coeffs) if c}
        )
        kernel = _wedge_kernel(w, ambient_dim)
        if len(kernel) != rank:
            continue
        group = IntegerSubgroup.build(ambient_dim, kernel)
        rep = representing_multivector(group)
        assert rep == w or rep == -w
        yield group


def _wedge_kernel(w: Multivector, ambient_dim: int) -> list[list[int]]:
    """Integer kernel of v -> v ^ w, as rows."""
    if w.grade == ambient_dim:
        return [
            [1 if j == i else 0 for j in range(ambient_dim)]
            for i in range(ambient_dim)
        ]
    out_masks = {}
    rows: list[list[int]] = []
    columns = []
    for j in range(ambient_dim):
        ej = Multivector.basis(ambient_dim, [j])
        columns.append(ej.wedge(w))
    for col in columns:
        for mask in col.comps:
            if mask not in out_masks:
                out_masks[mask] = len(rows)
                rows.append([0] * ambient_dim)
    for j, col in enumerate(columns):
        for mask, coeff in col.comps.items():
            rows[out_masks[mask]][j] = int(coeff)
    return integer_kernel(rows, ambient_dim)


@dataclass(frozen=True)
class LambdaSpec:
    """Coordinate embedding of (p, q_1..q_n) into Z^{2n}: p lands at the
    e_0 slot, q_i at slot (n-1)+i, zeros at the n-1 starred slots."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError("n must be >= 2")

    @property
    def ambient_dim(self) -> int:
        return 2 * self.n

    def embed_vector(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.n + 1:
            raise ConfigError("vector length must be n+1")
        out = [0] * (2 * self.n)
        out[0] = int(v[0])
        for i in range(1, self.n + 1):
            out[(self.n - 1) + i] = int(v[i])
        return tuple(out)

    def embed_multivector(self, w: Multivector) -> Multivector:
        return lambda_embed_multivector(w, self.n)

    def is_member(self, v: Sequence[int]) -> bool:
        return len(v) == 2 * self.n and all(
            v[i] == 0 for i in range(1, self.n)
        )


def lambda_members(spec: LambdaSpec, height: int) -> Iterator[tuple[int, ...]]:
    """Nonzero embedded vectors with max(|p|, ||q||_inf) <= height, in
    lexicographic (p, q) order."""
    if height < 0:
        raise ConfigError("height must be >= 0")
    for pv in itertools.product(
        range(-height, height + 1), repeat=spec.n + 1
    ):
        if any(pv):
            yield spec.embed_vector(pv)
