"""Exterior algebra over Q^l with exact rational coefficients.

Index sets are bitmasks over dimensions 0..l-1 (l <= 64), so the wedge
sign is a popcount of inversions and components store in a flat dict.
Serialization is the line format ``grade k; dim l; {i,j}: num/den; ...``
with index sets ascending and terms ordered by index tuple.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import ConfigError
from .exactnum import as_scalar

MAX_DIM = 64


def mask_of(indices: Iterable[int], dim: int) -> int:
    mask = 0
    for i in indices:
        if not 0 <= i < dim:
            raise ConfigError(f"index {i} outside dimension {dim}")
        bit = 1 << i
        if mask & bit:
            raise ConfigError("repeated index in a basis set")
        mask |= bit
    return mask


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def wedge_sign(a: int, b: int) -> int:
    """Sign reordering e_A ^ e_B into ascending order; 0 on overlap."""
    if a & b:
        return 0
    inversions = 0
    rest = b
    while rest:
        low = rest & -rest
        # Bits of a above this bit of b must commute past it.
        inversions += (a >> low.bit_length()).bit_count()
        rest ^= low
    return -1 if inversions & 1 else 1


class Multivector:
    """Homogeneous multivector: fixed grade, exact coefficients."""

    __slots__ = ("dim", "grade", "comps")

    def __init__(self, dim: int, grade: int, comps: dict[int, Fraction] | None = None):
        if not 0 < dim <= MAX_DIM:
            raise ConfigError(f"dimension must be in 1..{MAX_DIM}")
        if not 0 <= grade <= dim:
            raise ConfigError("grade out of range")
        self.dim = dim
        self.grade = grade
        self.comps: dict[int, Fraction] = {}
        if comps:
            for mask, coeff in comps.items():
                if mask.bit_count() != grade or mask >> dim:
                    raise ConfigError("component mask inconsistent with grade/dim")
                c = as_scalar(coeff)
                if c != 0:
                    self.comps[mask] = c

    @classmethod
    def basis(cls, dim: int, indices: Sequence[int], coeff=1) -> "Multivector":
        mask = mask_of(indices, dim)
        return cls(dim, len(indices), {mask: as_scalar(coeff)})

    @classmethod
    def from_vector(cls, entries: Sequence) -> "Multivector":
        dim = len(entries)
        return cls(dim, 1, {1 << i: as_scalar(v) for i, v in enumerate(entries) if v})

    def is_zero(self) -> bool:
        return not self.comps

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Multivector)
            and self.dim == other.dim
            and self.grade == other.grade
            and self.comps == other.comps
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.grade, frozenset(self.comps.items())))

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check_compatible(other)
        comps = dict(self.comps)
        for mask, c in other.comps.items():
            comps[mask] = comps.get(mask, Fraction(0)) + c
        return Multivector(self.dim, self.grade, comps)

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def __neg__(self) -> "Multivector":
        return self.scale(-1)

    def scale(self, factor) -> "Multivector":
        f = as_scalar(factor)
        return Multivector(self.dim, self.grade, {m: f * c for m, c in self.comps.items()})

    def _check_compatible(self, other: "Multivector") -> None:
        if self.dim != other.dim:
            raise ConfigError("dimension mismatch")
        if self.grade != other.grade:
            raise ConfigError("grade mismatch")

    def wedge(self, other: "Multivector") -> "Multivector":
        if self.dim != other.dim:
            raise ConfigError("dimension mismatch")
        grade = self.grade + other.grade
        if grade > self.dim:
            return Multivector(self.dim, min(grade, self.dim), {})
        comps: dict[int, Fraction] = {}
        for ma, ca in self.comps.items():
            for mb, cb in other.comps.items():
                sign = wedge_sign(ma, mb)
                if sign:
                    mask = ma | mb
                    comps[mask] = comps.get(mask, Fraction(0)) + sign * ca * cb
        return Multivector(self.dim, grade, comps)

    def sup_norm(self) -> Fraction:
        if not self.comps:
            return Fraction(0)
        return max(abs(c) for c in self.comps.values())

    def content(self) -> int:
        """Gcd of numerators when all coefficients are integers."""
        g = 0
        for c in self.comps.values():
            if c.denominator != 1:
                raise ConfigError("content needs integer coefficients")
            g = _gcd(g, abs(c.numerator))
        return g

    def coefficient(self, indices: Sequence[int]) -> Fraction:
        return self.comps.get(mask_of(indices, self.dim), Fraction(0))

    def terms(self) -> Iterator[tuple[tuple[int, ...], Fraction]]:
        """Terms ordered by ascending index tuple."""
        for mask in sorted(self.comps, key=indices_of):
            yield indices_of(mask), self.comps[mask]

    def serialize(self) -> str:
        parts = [f"grade {self.grade}; dim {self.dim}"]
        for idx, coeff in self.terms():
            inner = ",".join(str(i) for i in idx)
            parts.append(f"{{{inner}}}: {coeff.numerator}/{coeff.denominator}")
        return "; ".join(parts)

    def __repr__(self) -> str:
        return f"Multivector({self.serialize()!r})"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


_HEADER_RE = re.compile(r"^grade (\d+); dim (\d+)$")
_TERM_RE = re.compile(r"^\{([0-9,]*)\}: (-?\d+)/(\d+)$")


def deserialize(text: str) -> Multivector:
    chunks = [c.strip() for c in text.strip().split(";")]
    if len(chunks) < 2:
        raise ConfigError("truncated multivector text")
    header = _HEADER_RE.match(f"{chunks[0]}; {chunks[1]}")
    if not header:
        raise ConfigError(f"bad multivector header {text!r}")
    grade, dim = int(header.group(1)), int(header.group(2))
    comps: dict[int, Fraction] = {}
    body = chunks[2:]
    # Terms arrive as "{i,j}: num/den" but splitting on ';' separated them.
    for chunk in body:
        if not chunk:
            continue
        m = _TERM_RE.match(chunk)
        if not m:
            raise ConfigError(f"bad multivector term {chunk!r}")
        idx = tuple(int(s) for s in m.group(1).split(",")) if m.group(1) else ()
        if len(idx) != grade:
            raise ConfigError("term grade mismatch")
        comps[mask_of(idx, dim)] = Fraction(int(m.group(2)), int(m.group(3)))
    return Multivector(dim, grade, comps)


def wedge_all(vectors: Sequence[Multivector]) -> Multivector:
    if not vectors:
        raise ConfigError("wedge_all of an empty sequence")
    out = vectors[0]
    for v in vectors[1:]:
        out = out.wedge(v)
    return out


def apply_linear_map(matrix: Sequence[Sequence], w: Multivector) -> Multivector:
    """Functorial action of a square matrix on a multivector.

    ``matrix`` is row-major over the same dimension; columns are images
    of basis vectors.  Wedges of image columns are memoized per call
    since components of w share most sub-wedges.
    """
    dim = w.dim
    if len(matrix) != dim or any(len(row) != dim for row in matrix):
        raise ConfigError("matrix shape mismatch")
    columns = [
        Multivector(dim, 1, {1 << r: as_scalar(matrix[r][j]) for r in range(dim) if matrix[r][j]})
        for j in range(dim)
    ]
    cache: dict[tuple[int, ...], Multivector] = {}

    def image(idx: tuple[int, ...]) -> Multivector:
        if idx in cache:
            return cache[idx]
        if not idx:
            out = Multivector(dim, 0, {0: Fraction(1)})
        else:
            out = image(idx[:-1]).wedge(columns[idx[-1]])
        cache[idx] = out
        return out

    total = Multivector(dim, w.grade, {})
    for idx, coeff in w.terms():
        total = total + image(idx).scale(coeff)
    return total
