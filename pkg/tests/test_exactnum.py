import math
from fractions import Fraction

import pytest
import sympy

from khinlab.errors import ConfigError, PrecisionError
from khinlab.exactnum import (
    E,
    LN2,
    PI,
    Interval,
    as_scalar,
    good_constant,
    preset_value,
    sqrt_bounds,
    unit_ball_volume,
)


def test_as_scalar_parsing():
    assert as_scalar("3/4") == Fraction(3, 4)
    assert as_scalar("1e-40") == Fraction(1, 10**40)
    assert as_scalar("-2") == Fraction(-2)
    assert as_scalar(Fraction(1, 3)) == Fraction(1, 3)
    with pytest.raises(ConfigError):
        as_scalar("not-a-number")
    with pytest.raises(ConfigError):
        as_scalar("1/0")


@pytest.mark.parametrize("x", [Fraction(2), Fraction(3), Fraction(5), Fraction(7, 9)])
@pytest.mark.parametrize("eta", [Fraction(1, 10**6), Fraction(1, 10**40)])
def test_sqrt_bounds_enclose(x, eta):
    lo, hi = sqrt_bounds(x, eta)
    assert lo * lo <= x <= hi * hi
    assert hi - lo <= eta


def test_sqrt_bounds_exact_square():
    lo, hi = sqrt_bounds(Fraction(49, 4), Fraction(1, 1000))
    assert lo == hi == Fraction(7, 2)


def test_digit_constants_against_sympy():
    for interval, expr in ((PI, sympy.pi), (E, sympy.E), (LN2, sympy.log(2))):
        true = Fraction(str(sympy.nsimplify(sympy.N(expr, 80), rational=True)))
        assert interval.lo <= true <= interval.hi
        assert interval.width == Fraction(1, 10**50)


def test_interval_arithmetic():
    a = Interval(Fraction(1, 2), Fraction(2, 3))
    b = Interval(Fraction(-1, 3), Fraction(1, 4))
    s = a + b
    assert s.lo == Fraction(1, 6) and s.hi == Fraction(11, 12)
    p = a * b
    assert p.lo == Fraction(-2, 9) and p.hi == Fraction(1, 6)
    with pytest.raises(ConfigError):
        b.reciprocal()
    r = a.reciprocal()
    assert r.lo == Fraction(3, 2) and r.hi == Fraction(2)


def test_unit_ball_volumes():
    assert unit_ball_volume(0).lo == 1
    assert unit_ball_volume(1).lo == 2
    v2 = unit_ball_volume(2)
    assert float(v2.lo) <= math.pi <= float(v2.hi)
    v3 = unit_ball_volume(3)
    assert v3.lo <= Fraction(4) * PI.lo / 3 and Fraction(4) * PI.hi / 3 <= v3.hi
    c1 = good_constant(1)
    assert c1.lo == c1.hi == 4


@pytest.mark.parametrize(
    "name,target",
    [
        ("sqrt2m1", math.sqrt(2) - 1),
        ("sqrt3m1", math.sqrt(3) - 1),
        ("phi", (1 + math.sqrt(5)) / 2),
        ("e", math.e),
        ("pi", math.pi),
    ],
)
def test_presets_hit_their_targets(name, target):
    eta = Fraction(1, 10**30)
    value = preset_value(name, eta)
    assert abs(float(value) - target) < 1e-12


def test_preset_precision_certificates():
    eta = Fraction(1, 10**40)
    v = preset_value("sqrt2m1", eta)
    # (v+1)^2 must straddle 2 within the advertised width.
    assert (v + 1) ** 2 <= 2 <= (v + 1 + eta) ** 2
    with pytest.raises(PrecisionError):
        preset_value("pi", Fraction(1, 10**60))
    with pytest.raises(ConfigError):
        preset_value("nope", Fraction(1, 100))
