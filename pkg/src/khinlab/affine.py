"""Affine forms over a box: exact sups with vertex witnesses and exact
sublevel measures.

An affine form c + g.x on a closed box attains its absolute sup at a
vertex; witnesses report the lexicographically first maximizing vertex.
Sublevel measures |f| < eps reduce to the volume of a halfspace slice of
a box, computed by the inclusion-exclusion formula for simplex slices.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetError, ConfigError
from .exactnum import as_scalar

_MAX_VERTEX_DIMS = 20


@dataclass(frozen=True)
class Box:
    """Product of closed intervals [lo_i, hi_i]."""

    sides: tuple[tuple[Fraction, Fraction], ...]

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence]) -> "Box":
        sides = []
        for lo, hi in bounds:
            lo, hi = as_scalar(lo), as_scalar(hi)
            if lo >= hi:
                raise ConfigError("box sides must have positive length")
            sides.append((lo, hi))
        return cls(tuple(sides))

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls.from_bounds([(0, 1)] * d)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def lengths(self) -> tuple[Fraction, ...]:
        return tuple(hi - lo for lo, hi in self.sides)

    def volume(self) -> Fraction:
        out = Fraction(1)
        for length in self.lengths:
            out *= length
        return out

    def diameter_sq(self) -> Fraction:
        return sum((length * length for length in self.lengths), Fraction(0))

    def vertices(self) -> Iterator[tuple[Fraction, ...]]:
        """All corners, lexicographic in the (lo, hi) choice per axis."""
        if self.dim > _MAX_VERTEX_DIMS:
            raise BudgetError("vertex enumeration above the dimension budget")
        yield from itertools.product(*self.sides)

    def contains(self, x: Sequence[Fraction]) -> bool:
        return len(x) == self.dim and all(
            lo <= xi <= hi for xi, (lo, hi) in zip(x, self.sides)
        )


@dataclass(frozen=True)
class AffineForm:
    """c + g.x with exact rational coefficients."""

    const: Fraction
    grad: tuple[Fraction, ...]

    @classmethod
    def build(cls, const, grad: Sequence) -> "AffineForm":
        return cls(as_scalar(const), tuple(as_scalar(gi) for gi in grad))

    @property
    def dim(self) -> int:
        return len(self.grad)

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        if len(x) != self.dim:
            raise ConfigError("point dimension mismatch")
        return self.const + sum((gi * xi for gi, xi in zip(self.grad, x)), Fraction(0))

    def __add__(self, other: "AffineForm") -> "AffineForm":
        if self.dim != other.dim:
            raise ConfigError("dimension mismatch")
        return AffineForm(
            self.const + other.const,
            tuple(a + b for a, b in zip(self.grad, other.grad)),
        )

    def scale(self, factor) -> "AffineForm":
        f = as_scalar(factor)
        return AffineForm(f * self.const, tuple(f * gi for gi in self.grad))

    def shift(self, offset) -> "AffineForm":
        return AffineForm(self.const + as_scalar(offset), self.grad)

    def is_constant(self) -> bool:
        return all(gi == 0 for gi in self.grad)

    def range_over(self, box: Box) -> tuple[Fraction, Fraction]:
        """Exact [min, max] of the form over the box."""
        lo = hi = self.const
        for gi, (a, b) in zip(self.grad, box.sides):
            if gi >= 0:
                lo += gi * a
                hi += gi * b
            else:
                lo += gi * b
                hi += gi * a
        return lo, hi

    def serialize(self) -> str:
        grads = ",".join(str(gi) for gi in self.grad)
        return f"{self.const} | {grads}"


_FORM_RE = re.compile(r"^([^|]+)\|(.*)$")


def parse_form(text: str) -> AffineForm:
    m = _FORM_RE.match(text.strip())
    if not m:
        raise ConfigError(f"bad affine form {text!r}")
    const = as_scalar(m.group(1).strip())
    tail = m.group(2).strip()
    grad = [as_scalar(p.strip()) for p in tail.split(",")] if tail else []
    return AffineForm(const, tuple(grad))


def sup_abs_over_box(f: AffineForm, box: Box) -> tuple[Fraction, tuple[Fraction, ...]]:
    """(sup of |f| over the box, lexicographically first attaining vertex)."""
    if f.dim != box.dim:
        raise ConfigError("form/box dimension mismatch")
    best: Fraction | None = None
    witness: tuple[Fraction, ...] | None = None
    for vertex in box.vertices():
        value = abs(f(vertex))
        if best is None or value > best:
            best, witness = value, vertex
    assert best is not None and witness is not None
    return best, witness


def _slice_volume(weights: Sequence[Fraction], s: Fraction) -> Fraction:
    """Volume of {u in [0,1]^d : sum w_i u_i <= s} for strictly positive w."""
    d = len(weights)
    if d == 0:
        return Fraction(1 if s >= 0 else 0)
    if d > _MAX_VERTEX_DIMS:
        raise BudgetError("slice volume above the dimension budget")
    total = Fraction(0)
    for subset in itertools.product((0, 1), repeat=d):
        shift = s - sum((w for w, bit in zip(weights, subset) if bit), Fraction(0))
        if shift > 0:
            sign = -1 if sum(subset) & 1 else 1
            total += sign * shift**d
    denom = math.factorial(d)
    for w in weights:
        denom *= w
    return total / denom


def halfspace_volume(f: AffineForm, box: Box, level) -> Fraction:
    """Exact volume of {x in box : f(x) <= level}."""
    level = as_scalar(level)
    if f.dim != box.dim:
        raise ConfigError("form/box dimension mismatch")
    s = level - f.const
    weights: list[Fraction] = []
    scale = Fraction(1)
    for gi, (a, b) in zip(f.grad, box.sides):
        length = b - a
        scale *= length
        if gi == 0:
            continue
        if gi > 0:
            s -= gi * a
            weights.append(gi * length)
        else:
            # Flip u -> 1-u to make the weight positive.
            s -= gi * b
            weights.append(-gi * length)
    if not weights:
        return box.volume() if s >= 0 else Fraction(0)
    return _slice_volume(weights, s) * scale


def sublevel_measure(f: AffineForm, box: Box, eps) -> Fraction:
    """Exact measure of {x in box : |f(x)| < eps}; closed-box semantics,
    so the open/closed distinction only matters on null sets."""
    eps = as_scalar(eps)
    if eps <= 0:
        return Fraction(0)
    if f.is_constant():
        return box.volume() if abs(f.const) < eps else Fraction(0)
    return halfspace_volume(f, box, eps) - halfspace_volume(f, box, -eps)


class AffineMultivector:
    """Multivector whose components are affine forms in box variables."""

    __slots__ = ("dim", "grade", "var_dim", "comps")

    def __init__(self, dim: int, grade: int, var_dim: int, comps: dict[int, AffineForm]):
        self.dim = dim
        self.grade = grade
        self.var_dim = var_dim
        self.comps: dict[int, AffineForm] = {}
        for mask, form in comps.items():
            if mask.bit_count() != grade or mask >> dim:
                raise ConfigError("component mask inconsistent with grade/dim")
            if form.dim != var_dim:
                raise ConfigError("component variable dimension mismatch")
            if form.const != 0 or not form.is_constant():
                self.comps[mask] = form

    def component(self, indices: Sequence[int]) -> AffineForm:
        from .exterior import mask_of

        mask = mask_of(indices, self.dim)
        return self.comps.get(mask, AffineForm(Fraction(0), (Fraction(0),) * self.var_dim))

    def evaluate(self, x: Sequence[Fraction]):
        from .exterior import Multivector

        return Multivector(self.dim, self.grade, {m: f(x) for m, f in self.comps.items()})

    def terms(self) -> Iterator[tuple[tuple[int, ...], AffineForm]]:
        from .exterior import indices_of

        for mask in sorted(self.comps, key=indices_of):
            yield indices_of(mask), self.comps[mask]

    def serialize(self) -> str:
        parts = [f"grade {self.grade}; dim {self.dim}"]
        for idx, form in self.terms():
            inner = ",".join(str(i) for i in idx)
            parts.append(f"{{{inner}}}: {form.serialize()}")
        return "; ".join(parts)


def sup_norm_over_box(
    w: AffineMultivector, box: Box
) -> tuple[Fraction, tuple[tuple[int, ...], tuple[Fraction, ...]]]:
    """Sup over the box of the sup-norm across components.

    Returns (value, (index set, vertex)); ties resolve to the earliest
    component in index order, then the lexicographically first vertex.
    """
    if box.dim != w.var_dim:
        raise ConfigError("box/variable dimension mismatch")
    best: Fraction | None = None
    where: tuple[tuple[int, ...], tuple[Fraction, ...]] | None = None
    for idx, form in w.terms():
        value, vertex = sup_abs_over_box(form, box)
        if best is None or value > best:
            best, where = value, (idx, vertex)
    if best is None:
        return Fraction(0), ((), tuple(lo for lo, _ in box.sides))
    assert where is not None
    return best, where
