"""Exact scalars and certified rational enclosures.

Everything downstream computes over `fractions.Fraction`.  The few
irrational ingredients the package needs are provided here as two-sided
rational enclosures: integer square roots, 50-digit constants, unit-ball
volumes, and named coefficient presets expanded at a caller-chosen
precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from .errors import ConfigError, PrecisionError

Scalar = Fraction

# 50 decimal digits truncated toward zero; the true constant lies in
# [digits/10^50, (digits+1)/10^50).
_PI_DIGITS = 314159265358979323846264338327950288419716939937510
_E_DIGITS = 271828182845904523536028747135266249775724709369995
_LN2_DIGITS = 69314718055994530941723212145817656807550013436025
_SCALE_50 = 10**50
_PRESET_FLOOR = Fraction(1, _SCALE_50)


def as_scalar(value) -> Fraction:
    """Coerce ints, Fractions and strings like ``3/4`` or ``1e-40``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse scalar {value!r}") from exc
    if isinstance(value, float):
        # Floats are accepted verbatim: every float is an exact dyadic.
        return Fraction(value)
    raise ConfigError(f"cannot coerce {type(value).__name__} to a scalar")


def sqrt_bounds(x: Fraction, eta: Fraction) -> tuple[Fraction, Fraction]:
    """Rational lo <= sqrt(x) <= hi with hi - lo <= eta, via isqrt."""
    if x < 0:
        raise ConfigError("sqrt_bounds needs a nonnegative argument")
    if eta <= 0:
        raise ConfigError("sqrt_bounds needs a positive width")
    # sqrt(num/den) = sqrt(num*den)/den; scale so 1/(den*s) <= eta.
    num, den = x.numerator, x.denominator
    s = 1
    while Fraction(1, den * s) > eta:
        s *= 2
    r = isqrt(num * den * s * s)
    lo = Fraction(r, den * s)
    hi = Fraction(r + 1, den * s)
    if lo * lo == x:
        hi = lo
    return lo, hi


@dataclass(frozen=True)
class Interval:
    """Closed rational interval; arithmetic is outward-exact (no rounding)."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ConfigError("interval endpoints out of order")

    @classmethod
    def point(cls, v) -> "Interval":
        v = as_scalar(v)
        return cls(v, v)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, v: Fraction) -> bool:
        return self.lo <= v <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        other = _as_interval(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        other = _as_interval(other)
        prods = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(prods), max(prods))

    __radd__ = __add__
    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.lo <= 0 <= self.hi:
            raise ConfigError("reciprocal of an interval containing zero")
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other: "Interval") -> "Interval":
        return self * _as_interval(other).reciprocal()

    def midpoint_float(self) -> float:
        return float((self.lo + self.hi) / 2)


def _as_interval(v) -> Interval:
    if isinstance(v, Interval):
        return v
    return Interval.point(as_scalar(v))


PI = Interval(Fraction(_PI_DIGITS, _SCALE_50), Fraction(_PI_DIGITS + 1, _SCALE_50))
E = Interval(Fraction(_E_DIGITS, _SCALE_50), Fraction(_E_DIGITS + 1, _SCALE_50))
LN2 = Interval(Fraction(_LN2_DIGITS, _SCALE_50), Fraction(_LN2_DIGITS + 1, _SCALE_50))


@lru_cache(maxsize=None)
def unit_ball_volume(d: int) -> Interval:
    """Volume of the d-dimensional Euclidean unit ball as an enclosure.

    Uses v_d = v_{d-2} * 2*pi/d with exact rational seeds v_0 = 1, v_1 = 2.
    """
    if d < 0:
        raise ConfigError("dimension must be nonnegative")
    if d == 0:
        return Interval.point(1)
    if d == 1:
        return Interval.point(2)
    return unit_ball_volume(d - 2) * (PI * 2) * Interval.point(Fraction(1, d))


def good_constant(d: int) -> Interval:
    """The dimension constant 2^(d+2)/v_d used in (C, alpha)-good bounds."""
    if d < 1:
        raise ConfigError("dimension must be positive")
    return Interval.point(2 ** (d + 2)) / unit_ball_volume(d)


PRESET_NAMES = ("sqrt2m1", "sqrt3m1", "phi", "e", "pi")


def preset_value(name: str, eta: Fraction) -> Fraction:
    """Expand a named irrational coefficient to a rational within eta.

    The sqrt-based presets support arbitrary eta; ``e`` and ``pi`` come
    from 50-digit tables, so eta below 10^-50 raises PrecisionError.
    """
    eta = as_scalar(eta)
    if eta <= 0:
        raise ConfigError("precision must be positive")
    if name == "sqrt2m1":
        lo, _ = sqrt_bounds(Fraction(2), eta)
        return lo - 1
    if name == "sqrt3m1":
        lo, _ = sqrt_bounds(Fraction(3), eta)
        return lo - 1
    if name == "phi":
        lo, _ = sqrt_bounds(Fraction(5), 2 * eta)
        return (1 + lo) / 2
    if name in ("e", "pi"):
        if eta < _PRESET_FLOOR:
            raise PrecisionError(f"preset {name!r} is tabulated to 10^-50 only")
        return (E if name == "e" else PI).lo
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
