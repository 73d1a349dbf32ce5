"""Exact comparison of products of rational powers of positive rationals.

Quantities like eps * C_B^(1/(n+1-delta)) * 2^(delta*t/(n+1-delta)) are
irrational but have the form prod_i b_i^(e_i) with positive rational
bases and rational exponents.  Two such products compare exactly after
clearing exponent denominators, which reduces the question to a bigint
comparison.  A float prescreen answers the easy cases cheaply; the exact
route only runs near ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import BudgetError, ConfigError
from .exactnum import as_scalar

# Decide by float logs when the gap clears the accumulated rounding error
# by this many orders of magnitude; otherwise fall through to bigints.
_PRESCREEN_SLACK = 1e-9
_MAX_EXACT_BITS = 200_000_000


@dataclass(frozen=True)
class PowProd:
    """prod of base^exponent factors, base > 0 rational, exponent rational."""

    factors: tuple[tuple[Fraction, Fraction], ...]

    @classmethod
    def from_factors(cls, pairs: Iterable[tuple[object, object]]) -> "PowProd":
        merged: dict[Fraction, Fraction] = {}
        for base, expo in pairs:
            base = as_scalar(base)
            expo = as_scalar(expo)
            if base <= 0:
                raise ConfigError("PowProd bases must be positive")
            if base == 1 or expo == 0:
                continue
            merged[base] = merged.get(base, Fraction(0)) + expo
        items = tuple(sorted((b, e) for b, e in merged.items() if e != 0))
        return cls(items)

    @classmethod
    def from_scalar(cls, value) -> "PowProd":
        return cls.from_factors([(as_scalar(value), Fraction(1))])

    def __mul__(self, other: "PowProd") -> "PowProd":
        other = _coerce(other)
        return PowProd.from_factors(self.factors + other.factors)

    __rmul__ = __mul__

    def __truediv__(self, other: "PowProd") -> "PowProd":
        other = _coerce(other)
        inverted = tuple((b, -e) for b, e in other.factors)
        return PowProd.from_factors(self.factors + inverted)

    def __pow__(self, expo) -> "PowProd":
        expo = as_scalar(expo)
        return PowProd.from_factors((b, e * expo) for b, e in self.factors)

    def log2(self) -> float:
        return sum(float(e) * math.log2(b) for b, e in self.factors)

    def __float__(self) -> float:
        return 2.0 ** self.log2()

    def as_fraction(self) -> Fraction:
        """Exact value when every factor has an integer exponent."""
        out = Fraction(1)
        for b, e in self.factors:
            if e.denominator != 1:
                raise ConfigError("PowProd value is irrational")
            out *= b**e.numerator
        return out

    def compare(self, other) -> int:
        """Exact three-way comparison: -1, 0, or 1."""
        ratio = self / _coerce(other)
        if not ratio.factors:
            return 0
        # Prescreen on log2 with a conservative error budget.
        logsum = 0.0
        err = 0.0
        for b, e in ratio.factors:
            term = float(e) * math.log2(b)
            logsum += term
            err += _PRESCREEN_SLACK * (1.0 + abs(term))
        if abs(logsum) > err:
            return 1 if logsum > 0 else -1
        return _exact_sign(ratio.factors)

    def __lt__(self, other) -> bool:
        return self.compare(other) < 0

    def __le__(self, other) -> bool:
        return self.compare(other) <= 0

    def __gt__(self, other) -> bool:
        return self.compare(other) > 0

    def __ge__(self, other) -> bool:
        return self.compare(other) >= 0

    def eq_value(self, other) -> bool:
        return self.compare(other) == 0


def _coerce(v) -> PowProd:
    if isinstance(v, PowProd):
        return v
    return PowProd.from_scalar(v)


def _exact_sign(factors: tuple[tuple[Fraction, Fraction], ...]) -> int:
    """Sign of log(prod b^e) by clearing denominators to a bigint compare."""
    scale = math.lcm(*(e.denominator for _, e in factors))
    lhs = rhs = 1
    bits = 0
    for b, e in factors:
        k = e.numerator * (scale // e.denominator)
        num, den = b.numerator, b.denominator
        if k < 0:
            num, den, k = den, num, -k
        bits += k * (num.bit_length() + den.bit_length())
        if bits > _MAX_EXACT_BITS:
            raise BudgetError("exact power comparison exceeds the bigint budget")
        lhs *= num**k
        rhs *= den**k
    if lhs == rhs:
        return 0
    return 1 if lhs > rhs else -1


def powprod_min(values: Iterable[PowProd]) -> PowProd:
    """Exact minimum of a nonempty collection."""
    best: PowProd | None = None
    for v in values:
        v = _coerce(v)
        if best is None or v.compare(best) < 0:
            best = v
    if best is None:
        raise ConfigError("powprod_min of an empty collection")
    return best


def pow2(expo) -> PowProd:
    """2^expo for a rational exponent."""
    return PowProd.from_factors([(Fraction(2), as_scalar(expo))])


def rational_lower_bound(value: PowProd, rel_bits: int = 45) -> Fraction:
    """A certified rational r <= value with relative gap about 2^-rel_bits.

    The candidate comes from the float image and is verified by an exact
    comparison, stepping down in the (rare) case the float overshot.
    """
    guess = Fraction(float(value))
    if guess <= 0:
        guess = Fraction(1, 10**200)
    shrink = 1 - Fraction(1, 2**rel_bits)
    r = guess * shrink
    for _ in range(64):
        if value.compare(PowProd.from_scalar(r)) >= 0:
            return r
        r *= shrink
    raise BudgetError("could not certify a rational lower bound")
