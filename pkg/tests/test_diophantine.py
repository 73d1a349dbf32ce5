import math
from fractions import Fraction

import pytest

from khinlab.diophantine import (
    ApproxRate,
    DeltaMarginReport,
    best_value,
    dd_dim_bound,
    delta_margin,
    dioph_exponent_estimate,
    parse_rate,
    series_converges,
    w_membership_diagnostic,
)
from khinlab.errors import BudgetError, ConfigError, PrecisionError
from khinlab.exactnum import preset_value
from khinlab.flows import Hyperplane
from khinlab.powcmp import PowProd

F = Fraction


def test_rate_validation_and_parse():
    with pytest.raises(ConfigError):
        ApproxRate.power(0, 2)
    with pytest.raises(ConfigError):
        ApproxRate.tabulated([1, 2])  # increasing
    with pytest.raises(ConfigError):
        ApproxRate.tabulated([1, -1])
    r = parse_rate("1,2")
    assert (r.c, r.a, r.b) == (F(1), F(2), F(0))
    r = parse_rate("1/2, 3, 1.1")
    assert (r.c, r.a, r.b) == (F(1, 2), F(3), F(11, 10))
    assert parse_rate("psi0:3").a == 3
    with pytest.raises(ConfigError):
        parse_rate("1")


def test_rate_values():
    psi = ApproxRate.psi0(2)
    assert psi.psi_float(1) == 1.0
    assert psi.psi_float(4) == 4.0**-2
    assert psi.psi_fraction_at_pow2(3) == F(1, 64)
    half = ApproxRate.power(3, "1/2")
    assert half.psi_fraction_at_pow2(2) == F(3, 2)
    with pytest.raises(ConfigError):
        half.psi_fraction_at_pow2(1)  # 3/sqrt(2) is irrational
    logged = ApproxRate.power(1, 2, 2)
    assert logged.psi_float(10) == pytest.approx(0.01 / math.log(10) ** 2)
    with pytest.raises(ConfigError):
        logged.psi_at_pow2(4)
    tab = ApproxRate.tabulated(["1", "1/2", "1/2"])
    assert tab.psi_float(2) == 0.5
    assert tab.psi_at_pow2(1).as_fraction() == F(1, 2)
    with pytest.raises(ConfigError):
        tab.psi_float(4)


def test_series_verdicts_frozen():
    assert series_converges(ApproxRate.power(1, 2), 2).verdict == "DIVERGES"
    assert (
        series_converges(ApproxRate.power(1, 2, 2), 2).verdict == "CONVERGES"
    )
    rep = series_converges(ApproxRate.power(1, "3.2"), 3, terms=100)
    assert rep.verdict == "CONVERGES"
    expected = PowProd.from_factors([(F(5), F(1)), (F(100), F(-1, 5))])
    assert rep.tail_bound is not None
    assert rep.tail_bound.compare(expected) == 0
    assert rep.tail_bound_float == pytest.approx(5 * 100 ** -0.2)
    # boundary: a = n with b = 1 diverges, b > 1 converges
    assert series_converges(ApproxRate.power(1, 3, 1), 3).verdict == "DIVERGES"
    assert (
        series_converges(ApproxRate.power(1, 3, "1.01"), 3).verdict
        == "CONVERGES"
    )
    assert (
        series_converges(ApproxRate.tabulated([1] * 50), 2).verdict
        == "INDETERMINATE"
    )


def test_partial_sums_behave_like_verdicts():
    # divergent harmonic-type sum grows past any fixed mark
    small = series_converges(ApproxRate.power(1, 2), 2, terms=1000)
    big = series_converges(ApproxRate.power(1, 2), 2, terms=10**6)
    assert big.partial_sum > 14
    assert big.partial_sum - small.partial_sum > 6
    # convergent case: increments sit below the certified tail
    t1 = series_converges(ApproxRate.power(1, "3.2"), 3, terms=500)
    t2 = series_converges(ApproxRate.power(1, "3.2"), 3, terms=1000)
    assert t2.partial_sum - t1.partial_sum <= t1.tail_bound_float * (1 + 1e-12)
    assert t2.tail_bound_float < t1.tail_bound_float


def _brute_best(alphas, q):
    best = None
    for a in alphas:
        target = a * q
        dist = min(
            abs(target - p)
            for p in range(math.floor(target) - 2, math.floor(target) + 3)
        )
        best = dist if best is None else max(best, dist)
    return best


def test_best_value_matches_bruteforce():
    alphas = (F(3, 7), F(-5, 11), F(113, 355))
    for q in range(1, 60):
        assert best_value(alphas, q) == _brute_best(alphas, q)
        assert best_value(alphas, -q) == best_value(alphas, q)


def test_rational_sentinel_frozen():
    rep = dioph_exponent_estimate((F(1, 2), F(1, 3)), 100)
    assert rep.sentinel_q == 6
    assert rep.omega_hat == math.inf
    assert rep.min_best == 0
    zero_records = [r for r in rep.records if r.best_value == 0]
    assert zero_records and zero_records[0].q == 6
    assert zero_records[0].local_exponent == math.inf


def test_records_are_running_minima_sorted():
    rep = dioph_exponent_estimate((F(355, 113), F(22, 7)), 500, keep_all=True)
    assert [r.q for r in rep.records] == list(range(2, 501))
    running = None
    improvements = []
    for r in rep.records:
        if running is None or r.best_value < running:
            running = r.best_value
            improvements.append(r.q)
    lean = dioph_exponent_estimate((F(355, 113), F(22, 7)), 500)
    assert [r.q for r in lean.records] == improvements
    assert lean.min_best == rep.min_best
    assert lean.argmin_q == rep.argmin_q


def test_golden_ratio_records_follow_fibonacci():
    mp = pytest.importorskip("mpmath")
    eta = F(1, 10**30)
    phi = preset_value("phi", eta)
    rep = dioph_exponent_estimate([phi], 10**4)
    fibs = set()
    a, b = 1, 1
    while b <= 10**4:
        fibs.add(b)
        a, b = b, a + b
    assert {r.q for r in rep.records} <= fibs
    assert rep.argmin_q == max(fibs)
    mp.mp.dps = 60
    phi_hi = (1 + mp.sqrt(5)) / 2
    for r in rep.records:
        target = phi_hi * r.q
        ref = abs(target - mp.nint(target))
        assert abs(float(r.best_value) - float(ref)) <= float(eta) * r.q + 1e-25
    assert abs(rep.omega_hat - 1.0) < 0.05


def test_dirichlet_floor_two_coefficients():
    eta = F(1, 10**40)
    A = Hyperplane.build(
        [preset_value("sqrt2m1", eta), preset_value("sqrt3m1", eta)],
        precision=eta,
    )
    rep = dioph_exponent_estimate(A, 1000)
    assert rep.omega_hat >= 0.45


def test_precision_and_budget_guards():
    A = Hyperplane.build([F(1, 2), F(1, 3)], precision=F(1, 10**6))
    with pytest.raises(PrecisionError):
        dioph_exponent_estimate(A, 1000)  # 1000^3 * 1e-6 = 1e3 >= 1e-3
    with pytest.raises(ConfigError):
        dioph_exponent_estimate((F(1, 2), F(1, 3)), 1)
    with pytest.raises(BudgetError):
        dioph_exponent_estimate((F(1, 2), F(1, 3)), 10**8)


def _check_margin_exact(alphas, report: DeltaMarginReport):
    n = len(alphas)
    for q in range(2, report.q_max + 1):
        if q in report.exceptional_qs:
            continue
        bv = best_value(alphas, q)
        num, den = bv.numerator, bv.denominator
        expo = 100 * n - int(report.delta * 100)
        assert num**100 * q**expo > den**100


def test_delta_margin_exact_consistency():
    alphas = (F(5, 7), F(9, 23))
    rep = delta_margin(alphas, 200)
    _check_margin_exact(alphas, rep)
    # pushing one grid step higher must break some non-exceptional q
    if rep.delta > 0:
        higher = int(rep.delta * 100) + 1
        broken = False
        for q in range(2, 201):
            bv = best_value(alphas, q)
            if q in rep.exceptional_qs:
                continue
            if (
                bv.numerator**100 * q ** (100 * 2 - higher)
                <= bv.denominator**100
            ):
                broken = True
        assert broken or len(rep.exceptional_qs) == 10


def test_delta_margin_rational_flags_failure():
    rep = delta_margin((F(1, 2), F(1, 3)), 300)
    assert rep.delta == 0
    assert not rep.condition2_holds
    assert rep.exceptional_qs  # exact zeros at multiples of 6
    assert rep.exceptional_qs[0] == 6
    assert len(rep.exceptional_qs) <= 10


def test_delta_margin_monotone_in_Q():
    alphas = (F(7, 13), F(11, 17))
    small = delta_margin(alphas, 60)
    large = delta_margin(alphas, 400)
    assert large.delta <= small.delta


def test_delta_margin_badly_approximable_positive():
    eta = F(1, 10**40)
    A = Hyperplane.build(
        [preset_value("sqrt2m1", eta), preset_value("sqrt3m1", eta)],
        precision=eta,
    )
    rep = delta_margin(A, 500)
    assert rep.delta > 0
    assert rep.condition2_holds
    assert rep.exceptional_qs == ()


def test_w_membership_diagnostic():
    alphas = (F(3, 8), F(5, 12))
    rep0 = w_membership_diagnostic(alphas, 0, 50)
    assert rep0.count == 50  # best < 1 always holds
    lcm = 24
    rep_hi = w_membership_diagnostic(alphas, 100, 200)
    assert rep_hi.count >= 200 // lcm
    assert all(q == 1 or q % lcm == 0 for q in rep_hi.qs)
    counts = [
        w_membership_diagnostic(alphas, v, 100).count
        for v in (F(0), F(1, 2), F(1), F(2), F(100))
    ]
    assert counts == sorted(counts, reverse=True)


def test_dim_bound_frozen():
    assert dd_dim_bound(ApproxRate.power(1, 3, "1.1"), 3, 2) == F(2)
    assert dd_dim_bound(ApproxRate.power(1, 100), 2, 1) == F(3, 101)
    assert dd_dim_bound(ApproxRate.power(1, 4), 2, 1) == F(3, 5)
    with pytest.raises(ConfigError):
        dd_dim_bound(ApproxRate.power(1, 2), 3, 2)
    with pytest.raises(ConfigError):
        dd_dim_bound(ApproxRate.tabulated([1]), 2, 1)
