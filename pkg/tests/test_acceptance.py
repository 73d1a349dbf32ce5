"""End-to-end acceptance suite: ten stated-scale criteria, one test and
one printed PASS line each, with wall-clock budgets asserted."""

import itertools
import random
import time
from fractions import Fraction

import numpy as np

from test_affine import random_box, random_form
from test_exterior import exact_det, mat_mul, random_matrix, random_multivector

from khinlab.affine import (
    AffineForm,
    AffineMultivector,
    Box,
    sublevel_measure,
    sup_abs_over_box,
    sup_norm_over_box,
)
from khinlab.cli import main, parse_psi
from khinlab.diophantine import (
    ApproxRate,
    dd_dim_bound,
    delta_margin,
    dioph_exponent_estimate,
)
from khinlab.exactnum import as_scalar, preset_value
from khinlab.exterior import Multivector, apply_linear_map
from khinlab.flows import FlowParams, Hyperplane, flow_orbit, lambda_embed_multivector
from khinlab.lattice import IntegerSubgroup, representing_multivector
from khinlab.measure import MCSampler, strip_bound_check, theorem31_report
from khinlab.nondiv import (
    NondivConstants,
    beta_threshold,
    bkm_empirical_check,
    closing_series,
    make_constants,
    nondiv_scan,
    verify_cvec_lemma,
)
from khinlab.powcmp import pow2

F = Fraction

PLANE_SPEC = "sqrt2m1,sqrt3m1@1e-40"
UNIT = Box.from_bounds([(0, 1)])


class budget:
    """Context manager asserting the block stays under its time budget
    and printing the one-line verdict."""

    def __init__(self, number: int, label: str, seconds: float):
        self.number, self.label, self.seconds = number, label, seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        verdict = "PASS" if exc_type is None and elapsed < self.seconds else "FAIL"
        print(
            f"ACCEPTANCE {self.number:02d} {self.label}: {verdict} "
            f"({elapsed:.1f}s, budget {self.seconds:.0f}s)"
        )
        assert elapsed < self.seconds, f"over budget: {elapsed:.1f}s"


def test_criterion_01_exterior_algebra():
    rng = random.Random(1001)
    with budget(1, "exterior suite, 500 exact instances", 60):
        for _ in range(500):
            dim = rng.randint(2, 6)
            ka = rng.randint(1, dim - 1)
            kb = rng.randint(1, dim - ka)
            a = random_multivector(rng, dim, ka)
            b = random_multivector(rng, dim, kb)
            assert a.wedge(b) == b.wedge(a).scale(F((-1) ** (ka * kb)))
            w = random_multivector(rng, dim, rng.randint(1, dim))
            m = random_matrix(rng, dim)
            mm = random_matrix(rng, dim)
            assert apply_linear_map(mat_mul(m, mm), w) == apply_linear_map(
                m, apply_linear_map(mm, w)
            )
            top = Multivector.basis(dim, list(range(dim)))
            det = exact_det(m)
            image = apply_linear_map(m, top)
            expected = {} if det == 0 else {(1 << dim) - 1: det}
            assert image.comps == expected


def _random_affine_multivector(rng: random.Random, n: int) -> AffineMultivector:
    dim, var_dim = 2 * n, n - 1
    grade = rng.randint(1, dim - 1)
    masks = [m for m in range(1 << dim) if bin(m).count("1") == grade]
    comps = {}
    for mask in rng.sample(masks, k=rng.randint(1, 4)):
        comps[mask] = AffineForm.build(
            F(rng.randint(-20, 20), rng.randint(1, 8)),
            [F(rng.randint(-20, 20), rng.randint(1, 8)) for _ in range(var_dim)],
        )
    return AffineMultivector(dim, grade, var_dim, comps)


def test_criterion_02_affine_sup_and_measure():
    rng = random.Random(2002)
    numpy_rng = np.random.default_rng(20020)
    per_axis = {1: 1000, 2: 32, 3: 10}  # every grid carries >= 10^3 points
    with budget(2, "affine sup vs grids, sublevel vs MC", 120):
        for i in range(200):
            n = (2, 3, 4)[i % 3]
            w = _random_affine_multivector(rng, n)
            box = random_box(rng, n - 1)
            sup, (idx, vertex) = sup_norm_over_box(w, box)
            assert abs(w.component(idx)(vertex)) == sup
            per = per_axis[n - 1]
            axes = [
                [lo + (hi - lo) * F(j, per - 1) for j in range(per)]
                for lo, hi in box.sides
            ]
            for p in itertools.product(*axes):
                for _, form in w.terms():
                    assert abs(form(p)) <= sup
        checked = 0
        while checked < 50:
            d = rng.randint(1, 3)
            f = random_form(rng, d)
            box = random_box(rng, d)
            sup, _ = sup_abs_over_box(f, box)
            if sup == 0:
                continue
            eps = sup * F(rng.randint(1, 7), 8)
            exact = sublevel_measure(f, box, eps)
            if exact == 0 or exact == box.volume():
                continue
            samples = 1_000_000
            lows = np.array([float(lo) for lo, _ in box.sides])
            lens = np.array([float(hi - lo) for lo, hi in box.sides])
            pts = lows + lens * numpy_rng.random((samples, d))
            vals = float(f.const) + pts @ np.array([float(g) for g in f.grad])
            phat = float(np.mean(np.abs(vals) < float(eps)))
            p = float(exact / box.volume())
            sigma = (p * (1 - p) / samples) ** 0.5
            assert abs(phat - p) <= 4 * sigma + 1e-9
            checked += 1


def test_criterion_03_case2_constant_component():
    rng = random.Random(3003)
    with budget(3, "case-2 top component identity", 60):
        for n in (2, 3, 4):
            full = IntegerSubgroup.build(
                n + 1, [[int(i == j) for j in range(n + 1)] for i in range(n + 1)]
            )
            w = lambda_embed_multivector(representing_multivector(full), n)
            idx = (0,) + tuple(range(1, n)) + (2 * n - 1,)
            for _ in range(20):
                plane = Hyperplane.build(
                    [F(rng.randint(-30, 30), rng.randint(1, 9)) for _ in range(n)]
                )
                eps = F(rng.randint(1, 9), 10)
                t = rng.randint(1, 6)
                x = tuple(F(rng.randint(0, 8), 8) for _ in range(n - 1))
                orbit = flow_orbit(w, plane, FlowParams(eps, t))
                form = orbit.component(idx)
                assert form.is_constant()
                assert form.const == eps ** (n + 1) * F(2) ** ((n - 1) * t)
                assert orbit.evaluate(x).coefficient(idx) == form.const


def test_criterion_04_cvec_lemma_exhaustive():
    rng = random.Random(4004)
    with budget(4, "c-vector lemma harness, height 2", 300):
        for n, j in ((2, 2), (3, 2), (3, 3)):
            alphas = []
            for _ in range(20):
                entries = []
                for _ in range(n):
                    den = rng.randint(1, 50)
                    entries.append(F(rng.randint(-10 * den + 1, 10 * den - 1), den))
                alphas.append(tuple(entries))
            report = verify_cvec_lemma(n, j, 2, alphas)
            assert report.violations == ()
            assert report.min_value >= 1 - F(1, 10**12)


def test_criterion_05_shell_measure_bound():
    plane = Hyperplane.from_spec(PLANE_SPEC)
    rng = random.Random(5005)
    with budget(5, "shell measure bound and strip inequality", 600):
        rows = theorem31_report(
            UNIT, plane, ApproxRate.psi0(2), range(1, 11), MCSampler(100_000, 41)
        )
        assert len(rows) == 10
        assert all(r.ok for r in rows)
        assert all(r.bound == 96 for r in rows)  # C(2, unit) = 6 times 2^4
        checked = 0
        while checked < 100:
            q = (rng.randint(-15, 15), rng.randint(-15, 15))
            if q == (0, 0):
                continue
            theta = F(1, rng.randint(2, 50))
            ok, lhs, rhs_lo = strip_bound_check(UNIT, q, plane, theta)
            assert ok, (q, theta, lhs, rhs_lo)
            checked += 1


def test_criterion_06_orbit_scan_and_bkm():
    plane = Hyperplane.from_spec(PLANE_SPEC)
    with budget(6, "orbit lower-bound scan and BKM spot-check", 900):
        margin = delta_margin(plane.alpha, 10**4)
        assert margin.delta == F(71, 100)
        assert margin.exceptional_qs == ()
        assert margin.condition2_holds
        consts = make_constants(UNIT, 2, margin.delta)
        report = nondiv_scan(
            plane, UNIT, F(1, 2), range(2, 11), 5, consts,
            frozenset(margin.exceptional_qs),
        )
        assert report.checked == 10395
        assert report.violations == ()
        assert report.exceptional_failures == 0
        beta = F(3, 10)
        assert beta < beta_threshold(2, margin.delta)
        backed = set()
        for t in range(2, 11):
            record = bkm_empirical_check(
                plane, UNIT, t, pow2(-beta * t), 2**t - 1,
                MCSampler(20_000, 97), consts,
            )
            assert not record.widened
            if t >= 6:  # eps(t) <= rho exactly from t = 6 on
                assert record.precondition_ok
                assert record.ok is True
                backed.add(t)
            else:
                assert not record.precondition_ok
                assert record.ok is None
        assert backed == {6, 7, 8, 9, 10}


def test_criterion_07_exponent_diagnostics():
    with budget(7, "approximation exponent diagnostics", 60):
        rational = dioph_exponent_estimate([F(1, 2), F(1, 3)], 100)
        assert rational.sentinel_q == 6
        assert rational.omega_hat == float("inf")
        phi = preset_value("phi", as_scalar("1e-30"))
        golden = dioph_exponent_estimate([phi], 10**5)
        assert abs(golden.omega_hat - 1.0) < 0.05
        assert round(golden.omega_hat, 4) == 1.0449
        assert golden.argmin_q == 75025  # Fibonacci, as convergents demand
        pair = Hyperplane.from_spec(PLANE_SPEC)
        generic = dioph_exponent_estimate(pair.alpha, 10**3)
        assert generic.omega_hat >= 0.45
        assert round(generic.omega_hat, 4) == 0.5878


def test_criterion_08_dimension_bound():
    with budget(8, "dimension bound calculator", 10):
        psi = parse_psi("pow:a=3,b=1.1")
        assert dd_dim_bound(psi, 3, 2) == F(2)
        assert dd_dim_bound(ApproxRate.power(1, 3, F(11, 10)), 3, 2) == F(2)


def test_criterion_09_closing_series_tail():
    with budget(9, "closing series tail vs closed form", 10):
        consts = NondivConstants(2, F(1, 2), F(1, 2), F(1, 3))
        for big_t in (10, 20, 40):
            report = closing_series(consts, F(1, 10), big_t)
            closed = 2**0.4 * 2 ** (-0.1 * (big_t + 1)) / (1 - 2**-0.1)
            assert abs(report.tail - closed) < 1e-12
            assert report.dominant == 0
            assert report.t_certified == 4


def test_criterion_10_byte_reproducibility(tmp_path):
    scan = [
        "nondiv-scan", "--alpha", PLANE_SPEC, "--box", "0,1", "--eps", "1/2",
        "--t", "2..4", "--height", "3", "--Q", "2000",
    ]
    mc = [
        "scan-measure", "--alpha", PLANE_SPEC, "--box", "0,1",
        "--psi", "psi0:2", "--t", "1..2", "--sampler", "mc:20000:7",
    ]
    with budget(10, "byte-identical artifacts across workers", 300):
        outs = []
        for name, workers in (("a", "1"), ("b", "4")):
            out = tmp_path / name
            assert main([*scan, "--workers", workers, "--out", str(out)]) == 0
            outs.append(out)
        for name in ("manifest.json", "nondiv-scan.json", "nondiv-scan.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
        reruns = []
        for name in ("c", "d"):
            out = tmp_path / name
            assert main([*mc, "--out", str(out)]) == 0
            reruns.append(out)
        for name in ("manifest.json", "scan-measure.json", "scan-measure.csv"):
            assert (reruns[0] / name).read_bytes() == (reruns[1] / name).read_bytes()
