"""Hit tests, exact strips, the estimator, and the counting bound."""

import random
from fractions import Fraction

import pytest

from khinlab.affine import Box
from khinlab.diophantine import ApproxRate
from khinlab.errors import BudgetError, ConfigError, PrecisionError
from khinlab.flows import Hyperplane
from khinlab.measure import (
    GEQ,
    LESS,
    GridSampler,
    MCSampler,
    ShellSpec,
    borel_cantelli_tail,
    box_counting_constant,
    build_runs_n2,
    dist_to_int,
    estimate_region_measure,
    hit_test,
    parse_sampler,
    sample_points,
    strip_bound_check,
    strip_measure_exact,
    theorem31_report,
)

HALF_PLANE = Hyperplane((Fraction(0), Fraction(1, 2)))
PSI2 = ApproxRate.psi0(2)


def test_geq_witness_frozen():
    w = hit_test([Fraction(1, 2)], HALF_PLANE, 1, PSI2, GEQ)
    assert w is not None
    assert (w.p, w.q, w.value) == (-1, (2, 0), Fraction(0))


def test_less_witness_frozen():
    w = hit_test([Fraction(1, 2)], HALF_PLANE, 1, PSI2, LESS)
    assert w is not None
    assert (w.p, w.q, w.value) == (0, (-1, 2), Fraction(0))


def test_hit_test_respects_shell_and_side():
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    for side in (LESS, GEQ):
        for xk in range(7):
            w = hit_test([Fraction(xk, 7)], plane, 2, PSI2, side)
            if w is None:
                continue
            assert ShellSpec(2).contains(w.q)
            inside = abs(w.q[0] + plane.alpha[1] * w.q[1]) < 1
            assert inside == (side == LESS)
            r = w.q[0] * Fraction(xk, 7) + w.q[1] * (
                plane.alpha[0] + plane.alpha[1] * Fraction(xk, 7)
            )
            assert abs(w.p + r) == w.value
            assert w.value < PSI2.psi_fraction_at_pow2(2)


def test_hit_test_budget_guard():
    with pytest.raises(BudgetError):
        hit_test([Fraction(1, 2)], HALF_PLANE, 12, PSI2, GEQ, q_budget=1000)


def test_strip_example_frozen():
    rep = strip_measure_exact(Box.unit(1), (1, 1), HALF_PLANE, Fraction(1, 10))
    assert rep.measure == Fraction(1, 5)
    assert rep.strip_count == 2
    assert rep.s_sq == Fraction(9, 4)
    assert rep.gradient == (Fraction(3, 2),)


def _interval_union_measure(const, grad, theta):
    """1-d oracle: measure of {x in (0,1) : dist(const + grad x) < theta}
    by direct interval arithmetic."""
    if grad == 0:
        return Fraction(1) if dist_to_int(const) < theta else Fraction(0)
    lo_v = min(const, const + grad)
    hi_v = max(const, const + grad)
    total = Fraction(0)
    import math

    for p in range(math.floor(lo_v - theta) - 1, math.ceil(hi_v + theta) + 2):
        a = (p - theta - const) / grad
        b = (p + theta - const) / grad
        a, b = min(a, b), max(a, b)
        a = max(a, Fraction(0))
        b = min(b, Fraction(1))
        if b > a:
            total += b - a
    return total


def test_strip_measure_matches_interval_oracle():
    rng = random.Random(5)
    for _ in range(60):
        alpha = (Fraction(rng.randint(-8, 8), rng.randint(1, 9)),
                 Fraction(rng.randint(-8, 8), rng.randint(1, 9)))
        plane = Hyperplane(alpha)
        q = (rng.randint(-6, 6), rng.randint(-6, 6))
        if q == (0, 0):
            continue
        theta = Fraction(rng.randint(1, 5), rng.randint(10, 40))
        if 2 * theta > 1:
            theta = Fraction(1, 4)
        rep = strip_measure_exact(Box.unit(1), q, plane, theta)
        const = plane.alpha[0] * q[1]
        grad = q[0] + plane.alpha[1] * q[1]
        assert rep.measure == _interval_union_measure(const, grad, theta)


def test_strip_zero_gradient_branches():
    # q = (-1, 2) kills the gradient for alpha_1 = 1/2
    rep = strip_measure_exact(Box.unit(1), (-1, 2), HALF_PLANE, Fraction(1, 10))
    assert rep.measure == Fraction(1)  # constant 0, always within theta
    assert rep.s_sq == 0
    shifted = Hyperplane((Fraction(1, 3), Fraction(1, 2)))
    rep2 = strip_measure_exact(Box.unit(1), (-1, 2), shifted, Fraction(1, 4))
    assert rep2.measure == Fraction(0)  # constant 2/3, distance 1/3
    rep3 = strip_measure_exact(Box.unit(1), (-1, 2), shifted, Fraction(2, 5))
    assert rep3.measure == Fraction(1)


def test_strip_wide_threshold_covers_box():
    rep = strip_measure_exact(Box.unit(1), (1, 1), HALF_PLANE, Fraction(3, 5))
    assert rep.measure == Fraction(1)


def test_strip_rejects_bad_inputs():
    with pytest.raises(ConfigError):
        strip_measure_exact(Box.unit(1), (1, 1), HALF_PLANE, 0)
    with pytest.raises(ConfigError):
        strip_measure_exact(Box.unit(1), (1, 1, 1), HALF_PLANE, Fraction(1, 4))


def test_strip_bound_holds_on_random_sample():
    rng = random.Random(9)
    box = Box.from_bounds([(Fraction(-1, 3), Fraction(3, 2))])
    for _ in range(40):
        alpha = (Fraction(rng.randint(-5, 5), 7),
                 Fraction(rng.randint(-5, 5), 7))
        plane = Hyperplane(alpha)
        q = (rng.randint(-9, 9), rng.randint(-9, 9))
        if q == (0, 0):
            continue
        ok, lhs, rhs_lo = strip_bound_check(box, q, plane, Fraction(1, 8))
        assert ok, (q, alpha, lhs, rhs_lo)


def test_mc_sampling_deterministic_and_exact():
    box = Box.from_bounds([(Fraction(1, 4), Fraction(3, 4))])
    a = sample_points(box, MCSampler(50, 123))
    b = sample_points(box, MCSampler(50, 123))
    assert a == b
    assert all(isinstance(x[0], Fraction) for x in a)
    assert all(box.contains(x) for x in a)
    c = sample_points(box, MCSampler(50, 124))
    assert a != c


def test_grid_sampling_midpoints_frozen():
    pts = sample_points(Box.unit(1), GridSampler(3))
    assert pts == [(Fraction(1, 6),), (Fraction(1, 2),), (Fraction(5, 6),)]
    pts2 = sample_points(Box.unit(2), GridSampler(2))
    assert len(pts2) == 4
    assert pts2[0] == (Fraction(1, 4), Fraction(1, 4))


def test_parse_sampler():
    assert parse_sampler("mc:100:7") == MCSampler(100, 7)
    assert parse_sampler("grid:12") == GridSampler(12)
    with pytest.raises(ConfigError):
        parse_sampler("quasi:3")


def test_runs_partition_shell():
    plane = Hyperplane((Fraction(2, 7), Fraction(3, 11)))
    for t in (1, 2, 3):
        shell = ShellSpec(t)
        expanded = {}
        for side in (LESS, GEQ):
            q2v, ptr, starts, lens = build_runs_n2(plane, t, side)
            qs = set()
            for j, q2 in enumerate(q2v):
                for r in range(int(ptr[j]), int(ptr[j + 1])):
                    for q1 in range(int(starts[r]),
                                    int(starts[r]) + int(lens[r])):
                        qs.add((q1, int(q2)))
            expanded[side] = qs
        assert not (expanded[LESS] & expanded[GEQ])
        full = {
            (q1, q2)
            for q1 in range(-shell.hi + 1, shell.hi)
            for q2 in range(-shell.hi + 1, shell.hi)
            if shell.contains((q1, q2))
        }
        assert expanded[LESS] | expanded[GEQ] == full
        window = {
            q for q in expanded[LESS]
            if abs(q[0] + plane.alpha[1] * q[1]) < 1
        }
        assert window == expanded[LESS]


def test_box_mode_runs():
    plane = Hyperplane((Fraction(0), Fraction(1, 2)))
    q2v, ptr, starts, lens = build_runs_n2(plane, 2, LESS, mode="box")
    qs = set()
    for j, q2 in enumerate(q2v):
        for r in range(int(ptr[j]), int(ptr[j + 1])):
            for q1 in range(int(starts[r]), int(starts[r]) + int(lens[r])):
                qs.add((q1, int(q2)))
    assert (0, 0) not in qs
    assert all(max(abs(a), abs(b)) < 4 for a, b in qs)
    assert all(abs(a + Fraction(1, 2) * b) < 1 for a, b in qs)
    # every nonzero q2 in the box contributes its window integers
    assert (0, 1) in qs and (-1, 2) in qs


@pytest.mark.parametrize("side", [LESS, GEQ])
def test_estimator_kernel_matches_exact_path(side):
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    for t in (1, 2, 3):
        k = estimate_region_measure(box, plane, t, PSI2, side,
                                    MCSampler(600, 21))
        e = estimate_region_measure(box, plane, t, PSI2, side,
                                    MCSampler(600, 21), force_path="exact")
        assert k.hits == e.hits
        assert k.estimate == e.estimate
        assert k.backend in ("compiled", "numpy")
        assert e.backend == "exact"


def test_estimator_matches_hit_test_on_grid():
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    t = 2
    grid = GridSampler(40)
    for side in (LESS, GEQ):
        est = estimate_region_measure(box, plane, t, PSI2, side, grid)
        direct = sum(
            1 for x in sample_points(box, grid)
            if hit_test(x, plane, t, PSI2, side) is not None
        )
        assert est.hits == direct
        assert est.ci is None


def test_estimator_restrict_qs_matches_full_side():
    from khinlab.measure import _enumerate_side_qs

    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    qs = _enumerate_side_qs(plane, 2, GEQ, 10**6)
    full = estimate_region_measure(box, plane, 2, PSI2, GEQ,
                                   MCSampler(400, 5))
    restricted = estimate_region_measure(box, plane, 2, PSI2, GEQ,
                                         MCSampler(400, 5), restrict_qs=qs)
    assert full.hits == restricted.hits


def test_estimator_worker_count_invariance():
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    reports = [
        estimate_region_measure(box, plane, 3, PSI2, GEQ,
                                MCSampler(9000, 77), workers=w)
        for w in (1, 2, 5)
    ]
    assert len({r.hits for r in reports}) == 1
    assert len({r.estimate for r in reports}) == 1


def test_estimator_ci_contains_exact_strip_measure():
    # single-q region has an exactly computable measure; the Monte Carlo
    # interval at 4 sigma should cover it (fixed seed, checked once)
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    q = (3, 1)
    theta = Fraction(1, 16)
    exact = strip_measure_exact(box, q, plane, theta).measure
    est = estimate_region_measure(
        box, plane, 2, PSI2, GEQ, MCSampler(4000, 31), restrict_qs=[q],
        theta_override=theta,
    )
    lo, hi = est.ci
    assert lo <= float(exact) <= hi


def test_estimator_guards():
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    box = Box.unit(1)
    with pytest.raises(BudgetError):
        estimate_region_measure(box, plane, 13, PSI2, GEQ, MCSampler(10, 1))
    with pytest.raises(PrecisionError):
        estimate_region_measure(box, plane, 2, PSI2, GEQ, MCSampler(10, 1),
                                theta_override=Fraction(1, 10**12))
    with pytest.raises(ConfigError):
        estimate_region_measure(box, plane, 2, PSI2, "between",
                                MCSampler(10, 1))
    with pytest.raises(ConfigError):
        estimate_region_measure(Box.unit(2), plane, 2, PSI2, GEQ,
                                MCSampler(10, 1))


def test_wide_threshold_shortcut():
    plane = Hyperplane((Fraction(1, 3), Fraction(5, 7)))
    est = estimate_region_measure(
        Box.unit(1), plane, 2, PSI2, GEQ, MCSampler(100, 1),
        theta_override=Fraction(3, 5),
    )
    assert est.backend == "shortcut"
    assert est.estimate == Fraction(1)


def test_counting_constant_values():
    assert box_counting_constant(Box.unit(1), 2) == 6
    # (0,1) x (0,2): sum 3, max one-left-out product 2
    box = Box.from_bounds([(0, 1), (0, 2)])
    assert box_counting_constant(box, 3) == 2 * (3 + 2) * 2


def test_theorem31_rows_frozen_bound():
    rows = theorem31_report(Box.unit(1), HALF_PLANE, PSI2, [1, 2, 3],
                            MCSampler(500, 13))
    assert [r.bound for r in rows] == [96, 96, 96]
    assert all(r.ok for r in rows)
    assert all(r.margin == r.bound - r.estimate for r in rows)
    doubled = theorem31_report(Box.unit(1), HALF_PLANE,
                               ApproxRate.power(2, 2), [1], MCSampler(500, 13))
    assert doubled[0].bound == 192


def test_theorem31_bound_ratio_tracks_psi():
    psi = ApproxRate.power(1, 3)
    rows = theorem31_report(Box.unit(1), HALF_PLANE, psi, [1, 2],
                            MCSampler(200, 3))
    # ratio 2^n * psi(2^{t+1})/psi(2^t) = 4 * 1/8 = 1/2
    assert rows[1].bound / rows[0].bound == Fraction(1, 2)


def test_borel_cantelli_geometric_frozen():
    for T in (5, 10):
        rep = borel_cantelli_tail([Fraction(1, 2**t) for t in range(T)])
        assert rep.tail == Fraction(2, 2**T)
        assert rep.ratio == Fraction(1, 2)
        assert not rep.divergent
        assert rep.partial_sums[-1] == 2 - Fraction(2, 2**T)


def test_borel_cantelli_flags_and_edges():
    div = borel_cantelli_tail([1, 1, 1])
    assert div.divergent and div.tail is None
    zero = borel_cantelli_tail([0, 0])
    assert zero.tail == 0 and not zero.divergent
    mixed = borel_cantelli_tail(
        [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]
    )
    assert mixed.tail is None and mixed.ratio is None
    short = borel_cantelli_tail([Fraction(1, 2), Fraction(1, 4)])
    assert short.tail is None  # two terms never auto-detect a ratio
    forced = borel_cantelli_tail([Fraction(1, 2), Fraction(1, 3)],
                                 ratio=Fraction(1, 3))
    assert forced.tail == Fraction(1, 3) * Fraction(1, 3) / Fraction(2, 3)
    with pytest.raises(ConfigError):
        borel_cantelli_tail([-1])
