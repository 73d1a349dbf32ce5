"""Orbit lower bounds: coefficient-vector machinery and its unit-norm
lemma harness, the box minimax constant, the per-subgroup sup inequality
scan, the covering-measure spot check, goodness ratios, and the closing
series that certifies summability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterator, Sequence

from .affine import (
    AffineForm,
    Box,
    sublevel_measure,
    sup_abs_over_box,
    sup_norm_over_box,
)
from .diophantine import DeltaMarginReport, best_value
from .errors import BudgetError, ConfigError
from .exactnum import Interval, as_scalar, good_constant
from .exterior import Multivector, apply_linear_map, mask_of
from .flows import (
    FlowParams,
    Hyperplane,
    build_u_hat,
    flow_orbit,
    lambda_embed_multivector,
    x_tilde_P,
)
from .lattice import (
    IntegerSubgroup,
    enumerate_primitive_subgroups,
    representing_multivector,
)
from .linprog import solve_lp
from .measure import (
    LESS,
    EstimateReport,
    MCSampler,
    _wald_ci,
    estimate_region_measure,
    sample_points,
)
from .powcmp import PowProd, pow2, powprod_min, rational_lower_bound

CVEC_ENUM_BUDGET = 5 * 10**6


def l_count(indices: Sequence[int], i: int) -> int:
    """Number of elements of the index set strictly between 0 and i."""
    return sum(1 for j in indices if 0 < j < i)


@dataclass(frozen=True)
class CVector:
    """Coefficient vector attached to (I, w), length n+1, split as
    (c_plus, c_minus) = (first n entries, last entry)."""

    I: tuple[int, ...]
    c: tuple[Fraction, ...]

    @property
    def c_plus(self) -> tuple[Fraction, ...]:
        return self.c[:-1]

    @property
    def c_minus(self) -> Fraction:
        return self.c[-1]


def c_vector(I: Sequence[int], w: Multivector) -> CVector:
    """Entry at 0 is w_I; at i outside I it is the signed coefficient
    (-1)^{l(I,i)} w_{I + {i} - {0}}; at nonzero members of I it is 0."""
    I = tuple(sorted(I))
    if 0 not in I:
        raise ConfigError("index set must contain 0")
    if len(I) != w.grade:
        raise ConfigError("index set size must equal the grade")
    if any(i < 0 or i >= w.dim for i in I):
        raise ConfigError("index out of range")
    n = w.dim - 1
    entries = [Fraction(0)] * (n + 1)
    entries[0] = w.coefficient(I)
    rest = I[1:]
    for i in range(1, n + 1):
        if i in rest:
            continue
        shifted = tuple(sorted(rest + (i,)))
        sign = -1 if l_count(I, i) & 1 else 1
        entries[i] = sign * w.coefficient(shifted)
    return CVector(I, tuple(entries))


def cvec_norm(cv: CVector, alpha: Sequence[Fraction]) -> Fraction:
    """sup-norm of c_plus + alpha * c_minus (entrywise)."""
    if len(alpha) != len(cv.c_plus):
        raise ConfigError("alpha length mismatch")
    return max(abs(cp + a * cv.c_minus) for cp, a in zip(cv.c_plus, alpha))


def nonconstant_orbit_identity_check(
    w: Multivector, plane: Hyperplane, samples: Sequence[Sequence]
) -> bool:
    """At each rational x, components of u^_x w whose index set contains
    0 must equal (x~ P) . c_{I,w}; components without 0 stay constant."""
    n = plane.n
    if w.dim != n + 1:
        raise ConfigError("multivector dimension must be n + 1")
    for raw in samples:
        x = tuple(as_scalar(v) for v in raw)
        moved = apply_linear_map(build_u_hat(plane, x), w)
        row = x_tilde_P(plane, x)
        for idx in combinations(range(n + 1), w.grade):
            got = moved.coefficient(idx)
            if idx[0] == 0:
                cv = c_vector(idx, w)
                want = sum((r * c for r, c in zip(row, cv.c)), Fraction(0))
            else:
                want = w.coefficient(idx)
            if got != want:
                return False
    return True


def enumerate_unit_content_multivectors(
    n: int, j: int, height: int, budget: int = CVEC_ENUM_BUDGET
) -> Iterator[Multivector]:
    """Nonzero integer multivectors of grade j on n+1 coordinates:
    coefficient gcd 1, sup-norm <= height, first nonzero coefficient
    positive, in lexicographic coefficient order."""
    idxsets = list(combinations(range(n + 1), j))
    total = (2 * height + 1) ** len(idxsets)
    if total > budget:
        raise BudgetError(f"{total} coefficient tuples exceed budget {budget}")
    dim = n + 1
    for coeffs in product(range(-height, height + 1), repeat=len(idxsets)):
        first = next((c for c in coeffs if c), None)
        if first is None or first < 0:
            continue
        if math.gcd(*coeffs) != 1:
            continue
        yield Multivector(
            dim, j,
            {
                mask_of(idx, dim): Fraction(c)
                for idx, c in zip(idxsets, coeffs)
                if c
            },
        )


@dataclass(frozen=True)
class CvecLemmaReport:
    n: int
    j: int
    height: int
    alphas_checked: int
    w_checked: int
    min_value: Fraction
    witness_w: Multivector
    witness_I: tuple[int, ...]
    witness_alpha: tuple[Fraction, ...]
    violations: tuple[tuple[Multivector, tuple[Fraction, ...], Fraction], ...]


def verify_cvec_lemma(
    n: int,
    j: int,
    height: int,
    alphas: Sequence[Sequence],
    budget: int = CVEC_ENUM_BUDGET,
) -> CvecLemmaReport:
    """Exhaustive check that max over 0-containing index sets of
    ||c_plus + alpha c_minus|| is at least 1."""
    if not 2 <= j <= n:
        raise ConfigError("grade must lie in 2..n")
    alpha_list = [tuple(as_scalar(a) for a in al) for al in alphas]
    for al in alpha_list:
        if len(al) != n:
            raise ConfigError("alpha must have n entries")
    idx_with_zero = [
        idx for idx in combinations(range(n + 1), j) if idx[0] == 0
    ]
    min_value: Fraction | None = None
    witness = None
    violations = []
    w_count = 0
    for w in enumerate_unit_content_multivectors(n, j, height, budget):
        w_count += 1
        cvecs = [c_vector(idx, w) for idx in idx_with_zero]
        for al in alpha_list:
            norms = [cvec_norm(cv, al) for cv in cvecs]
            best = max(norms)
            if min_value is None or best < min_value:
                min_value = best
                witness = (w, idx_with_zero[norms.index(best)], al)
            if best < 1:
                violations.append((w, al, best))
    if min_value is None or witness is None:
        raise ConfigError("no multivectors in range")
    return CvecLemmaReport(
        n, j, height, len(alpha_list), w_count, min_value,
        witness[0], witness[1], witness[2], tuple(violations),
    )


# ---------------------------------------------------------------------------
# the box constant


def minimax_box_constant(box: Box) -> Fraction:
    """inf over forms normalized by max(|c|, ||g||_inf) = 1 of the
    vertex sup of |c + g.x|, one exact LP per fixed coordinate sign.

    Every affine form then satisfies
    sup_B |f| >= C_B * max(|const|, ||grad||_inf).
    """
    m = box.dim + 1  # coefficient variables (c, g); z is appended last
    zmax = Fraction(1)
    for lo, hi in box.sides:
        zmax += max(abs(lo), abs(hi))
    a_ub = []
    b_ub = []
    for v in box.vertices():
        row = [Fraction(1)] + [as_scalar(vi) for vi in v]
        a_ub.append(row + [Fraction(-1)])
        b_ub.append(Fraction(0))
        a_ub.append([-e for e in row] + [Fraction(-1)])
        b_ub.append(Fraction(0))
    objective = [Fraction(0)] * m + [Fraction(1)]
    best: Fraction | None = None
    for j in range(m):
        for s in (Fraction(1), Fraction(-1)):
            bounds = [
                (s, s) if i == j else (Fraction(-1), Fraction(1))
                for i in range(m)
            ]
            bounds.append((Fraction(0), zmax))
            sol = solve_lp(objective, a_ub, b_ub, bounds)
            if sol.status != "optimal":
                raise ConfigError(f"minimax LP returned {sol.status}")
            if best is None or sol.value < best:
                best = sol.value
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# constants bundle


@dataclass(frozen=True)
class NondivConstants:
    """Machine-computed constants for the orbit lower bound and the
    covering bound; rho defaults to its largest admissible value 1/k."""

    n: int
    delta: Fraction
    c_b: Fraction
    rho: Fraction
    n_d: int = 1

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.c_b <= 0:
            raise ConfigError("box constant must be positive")
        if not 0 < self.rho <= Fraction(1, self.k):
            raise ConfigError("rho must lie in (0, 1/k]")
        if self.n_d < 1:
            raise ConfigError("covering multiplicity must be >= 1")

    @property
    def k(self) -> int:
        return self.n + 1

    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def c_b1(self) -> PowProd:
        expo = Fraction(1) / (self.n + 1 - self.delta)
        return PowProd.from_factors([(self.c_b, expo)])

    @property
    def c_b3(self) -> Fraction:
        return self.c_b

    def y0(self, t: int) -> PowProd:
        """Crossover point of the two branch-1 estimates."""
        expo = Fraction(1) / (self.n + 1 - self.delta)
        return PowProd.from_factors(
            [(self.c_b, expo), (2, Fraction((self.n + 1) * t) * expo)]
        )


def make_constants(
    box: Box, n: int, delta, n_d: int = 1, rho=None
) -> NondivConstants:
    delta = as_scalar(delta)
    rho = Fraction(1, n + 1) if rho is None else as_scalar(rho)
    return NondivConstants(n, delta, minimax_box_constant(box), rho, n_d)


def orbit_sup_bound(params: FlowParams, consts: NondivConstants) -> PowProd:
    """eps times the minimum of the three branch bounds."""
    eps, t, n = params.eps, params.t, consts.n
    dl = consts.delta
    b1 = consts.c_b1 * pow2(dl * t / (n + 1 - dl))
    b2 = pow2(Fraction((n - 1) * t)) * PowProd.from_factors([(eps, n)])
    b3 = PowProd.from_factors([(consts.c_b3, 1), (eps, n - 1)]) * pow2(t)
    return PowProd.from_factors([(eps, 1)]) * powprod_min([b1, b2, b3])


def case1_exponent_identity(
    params: FlowParams, consts: NondivConstants
) -> bool:
    """Both branch-1 estimates evaluated at the crossover y0 equal the
    first branch bound exactly."""
    eps, t, n = params.eps, params.t, consts.n
    dl = consts.delta
    y0 = consts.y0(t)
    left = (
        PowProd.from_factors([(eps, 1), (consts.c_b, 1)])
        * pow2(Fraction(n * t))
        * y0 ** (dl - n)
    )
    right = PowProd.from_factors([(eps, 1)]) * pow2(Fraction(-t)) * y0
    target = (
        PowProd.from_factors([(eps, 1)])
        * consts.c_b1
        * pow2(dl * t / (n + 1 - dl))
    )
    return left.eq_value(target) and right.eq_value(target)


# ---------------------------------------------------------------------------
# per-subgroup scan


@dataclass(frozen=True)
class OrbitCheckRecord:
    t: int
    rank: int
    case: int
    w: Multivector
    sup: Fraction
    sup_where: tuple[tuple[int, ...], tuple[Fraction, ...]]
    bound: PowProd
    bound_lower: Fraction  # exact when rational, else certified lower bound
    margin: float
    exceptional: bool
    ok: bool


def _bound_as_rational(bound: PowProd) -> Fraction:
    try:
        return bound.as_fraction()
    except ConfigError:
        return rational_lower_bound(bound)


def sup_orbit_lower_bound_check(
    group: IntegerSubgroup,
    plane: Hyperplane,
    box: Box,
    params: FlowParams,
    consts: NondivConstants,
    exceptional_qs: frozenset[int] = frozenset(),
) -> OrbitCheckRecord:
    """Exact sup of the flowed representing multivector over the box,
    against eps times the three-branch minimum.

    The rank fixes the case (1 for vectors, 2 for the full lattice,
    3 between); only rank-1 groups can be flagged exceptional, by the
    last coordinate of their basis vector.
    """
    n = plane.n
    if group.ambient_dim != n + 1:
        raise ConfigError("subgroup must live in the (p, q) lattice")
    if box.dim != n - 1:
        raise ConfigError("box dimension must be n - 1")
    rank = group.rank
    if rank == 1:
        case = 1
    elif rank == n + 1:
        case = 2
    else:
        case = 3
    w = representing_multivector(group)
    orbit = flow_orbit(lambda_embed_multivector(w, n), plane, params)
    sup, where = sup_norm_over_box(orbit, box)
    bound = orbit_sup_bound(params, consts)
    ok = PowProd.from_scalar(sup).compare(bound) >= 0
    exceptional = False
    if case == 1:
        exceptional = abs(group.basis[0][-1]) in exceptional_qs
    return OrbitCheckRecord(
        params.t, rank, case, w, sup, where, bound,
        _bound_as_rational(bound), float(sup) - float(bound),
        exceptional, ok,
    )


@dataclass(frozen=True)
class NondivScanReport:
    records: tuple[OrbitCheckRecord, ...]
    checked: int
    violations: tuple[OrbitCheckRecord, ...]
    exceptional_failures: int


def nondiv_scan(
    plane: Hyperplane,
    box: Box,
    eps,
    t_range: Sequence[int],
    height: int,
    consts: NondivConstants,
    exceptional_qs: frozenset[int] = frozenset(),
    ranks: Sequence[int] | None = None,
    workers: int | None = None,
) -> NondivScanReport:
    """Every primitive subgroup of each requested rank and height, at
    every t; record order is (t, rank, enumeration order) regardless of
    the worker count."""
    n = plane.n
    eps = as_scalar(eps)
    rank_list = list(ranks) if ranks is not None else list(range(1, n + 2))
    jobs = []
    for t in t_range:
        params = FlowParams(eps, t)
        for rank in rank_list:
            groups = list(enumerate_primitive_subgroups(n + 1, rank, height))
            jobs.append((params, groups))

    def run_job(job):
        params, groups = job
        return [
            sup_orbit_lower_bound_check(
                g, plane, box, params, consts, exceptional_qs
            )
            for g in groups
        ]

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run_job, jobs))
    else:
        chunks = [run_job(j) for j in jobs]
    records = tuple(rec for chunk in chunks for rec in chunk)
    violations = tuple(r for r in records if not r.ok and not r.exceptional)
    flagged = sum(1 for r in records if not r.ok and r.exceptional)
    return NondivScanReport(records, len(records), violations, flagged)


@dataclass(frozen=True)
class Case1ChainRecord:
    qn: int
    coeff_max: Fraction  # max(|const|, ||grad||) of p + q . y(x)
    best: Fraction
    sup_e0: Fraction
    lower_bound_ok: bool  # sup_e0 >= eps 2^{nt} C_B coeff_max
    best_dominated: bool  # coeff_max >= best(|q_n|)
    condition2_ok: bool | None  # best >= |q_n|^{delta - n}; None if skipped
    exceptional: bool


def case1_chain_check(
    group: IntegerSubgroup,
    plane: Hyperplane,
    box: Box,
    params: FlowParams,
    consts: NondivConstants,
    delta_report: DeltaMarginReport,
) -> Case1ChainRecord:
    """The rank-1 inequality chain, link by link: the first coefficient
    sup beats eps 2^{nt} C_B max(|const|, ||grad||), that max beats the
    distance best(|q_n|), and best beats |q_n|^{delta - n} away from the
    exceptional set (within the margin report's scanned range)."""
    if group.rank != 1:
        raise ConfigError("chain check is for rank-1 subgroups")
    n = plane.n
    vec = group.basis[0]
    p0, q = vec[0], vec[1:]
    qn = q[-1]
    coeffs = [p0 + plane.alpha[0] * qn]
    coeffs += [q[i - 1] + plane.alpha[i] * qn for i in range(1, n)]
    coeff_max = max(abs(c) for c in coeffs)
    w = lambda_embed_multivector(representing_multivector(group), n)
    orbit = flow_orbit(w, plane, params)
    sup_e0, _ = sup_abs_over_box(orbit.component([0]), box)
    scale = params.eps * Fraction(2) ** (n * params.t)
    lower_ok = sup_e0 >= scale * consts.c_b * coeff_max
    if qn == 0:
        return Case1ChainRecord(
            0, coeff_max, Fraction(0), sup_e0, lower_ok, True, None, False
        )
    best = best_value(plane, abs(qn))
    exceptional = abs(qn) in set(delta_report.exceptional_qs)
    cond2: bool | None = None
    if not exceptional and 2 <= abs(qn) <= delta_report.q_max:
        target = PowProd.from_factors([(abs(qn), consts.delta - n)])
        cond2 = PowProd.from_scalar(best).compare(target) >= 0
    return Case1ChainRecord(
        qn, coeff_max, best, sup_e0, lower_ok, coeff_max >= best,
        cond2, exceptional,
    )


# ---------------------------------------------------------------------------
# covering bound


def bkm_bound(consts: NondivConstants, C, alpha: int, eps, vol_b) -> PowProd:
    """k (3^d N_d)^k C (eps/rho)^alpha |B|; eps may be an exact power
    product (the empirical check drives it as 2^{-beta t})."""
    if not isinstance(alpha, int) or alpha < 1:
        raise ConfigError("alpha must be a positive integer")
    eps_pp = (
        eps if isinstance(eps, PowProd)
        else PowProd.from_scalar(as_scalar(eps))
    )
    rho_pp = PowProd.from_scalar(consts.rho)
    if eps_pp.compare(rho_pp) > 0:
        raise ConfigError("eps must not exceed rho")
    front = Fraction(consts.k) * Fraction(3**consts.d * consts.n_d) ** consts.k
    lead = PowProd.from_scalar(front * as_scalar(C) * as_scalar(vol_b))
    return lead * (eps_pp / rho_pp) ** alpha


@dataclass(frozen=True)
class BkmCheckRecord:
    t: int
    estimate: EstimateReport
    fraction: Fraction
    bound: PowProd | None
    bound_float: float | None
    precondition_ok: bool
    required_height: int
    widened: bool  # requested height below the certified-complete one
    ok: bool | None  # None when the precondition fails


def bkm_empirical_check(
    plane: Hyperplane,
    box: Box,
    t: int,
    eps,
    height: int,
    sampler,
    consts: NondivConstants,
    C=None,
    workers: int | None = None,
) -> BkmCheckRecord:
    """Measured size of {x in B : some nonzero lattice vector lands
    below eps under the flow} against the covering bound.

    The flow scales every coordinate by eps, so membership does not
    depend on eps: it needs ||q|| < 2^t, the middle coordinates strictly
    inside 1, and |p + q . y(x)| < 2^{-nt}.  Vectors of height 2^t and
    above are excluded by the norm coordinates alone, which is the
    pruning certificate; a smaller requested height is widened to the
    certified one and flagged.  eps enters the bound side only, where it
    is compared exactly.
    """
    n = plane.n
    eps_pp = (
        eps if isinstance(eps, PowProd)
        else PowProd.from_scalar(as_scalar(eps))
    )
    theta = Fraction(1, 2 ** (n * t))
    est = estimate_region_measure(
        box, plane, t, None, LESS, sampler,
        workers=workers, theta_override=theta, mode="box",
    )
    required = 2**t - 1
    precondition_ok = eps_pp.compare(PowProd.from_scalar(consts.rho)) <= 0
    bound = None
    ok: bool | None = None
    if precondition_ok:
        c_val = good_constant(consts.d).hi if C is None else C
        bound = bkm_bound(consts, c_val, 1, eps_pp, box.volume())
        ok = PowProd.from_scalar(est.estimate).compare(bound) <= 0
    return BkmCheckRecord(
        t, est, Fraction(est.hits, est.samples), bound,
        None if bound is None else float(bound),
        precondition_ok, required, height < required, ok,
    )


# ---------------------------------------------------------------------------
# goodness


@dataclass(frozen=True)
class GoodRow:
    eps: Fraction
    ratio: Fraction
    ci: tuple[float, float] | None


@dataclass(frozen=True)
class GoodReport:
    rows: tuple[GoodRow, ...]
    worst_ratio: Fraction
    c_min: Fraction
    c_required: Fraction
    passed: bool
    vacuous: bool


def good_check(
    forms, box: Box, C, alpha: int, eps_grid: Sequence, sampler=None
) -> GoodReport:
    """Sublevel concentration ratios against C eps^alpha.

    A single affine form is measured exactly; a max-family needs a
    Monte Carlo sampler and gets 4-sigma intervals.  C may be an
    enclosure, in which case its lower end must still dominate.
    """
    if not isinstance(alpha, int) or alpha < 1:
        raise ConfigError("alpha must be a positive integer")
    eps_list = sorted(as_scalar(e) for e in eps_grid)
    if not eps_list or eps_list[0] <= 0 or eps_list[-1] > 1:
        raise ConfigError("eps grid must lie in (0, 1]")
    c_required = C.lo if isinstance(C, Interval) else as_scalar(C)
    single = isinstance(forms, AffineForm)
    family = [forms] if single else list(forms)
    if not family:
        raise ConfigError("need at least one form")
    sup = max(sup_abs_over_box(f, box)[0] for f in family)
    if sup == 0:
        rows = tuple(GoodRow(e, Fraction(0), None) for e in eps_list)
        return GoodReport(rows, Fraction(0), Fraction(0), c_required, True, True)
    rows = []
    c_min = Fraction(0)
    if single:
        vol = box.volume()
        for e in eps_list:
            ratio = sublevel_measure(family[0], box, e * sup) / vol
            rows.append(GoodRow(e, ratio, None))
            c_min = max(c_min, ratio / e**alpha)
    else:
        if not isinstance(sampler, MCSampler):
            raise ConfigError("a max-family needs a Monte Carlo sampler")
        pts = sample_points(box, sampler)
        for e in eps_list:
            level = e * sup
            hits = sum(
                1 for x in pts if max(abs(f(x)) for f in family) < level
            )
            ratio = Fraction(hits, len(pts))
            rows.append(GoodRow(e, ratio, _wald_ci(hits, len(pts), Fraction(1))))
            c_min = max(c_min, ratio / e**alpha)
    worst = max(row.ratio for row in rows)
    return GoodReport(
        tuple(rows), worst, c_min, c_required, c_min <= c_required, False
    )


# ---------------------------------------------------------------------------
# the closing series


def beta_threshold(n: int, delta) -> Fraction:
    """min((n-1)/(n+1), delta/(n+1-delta), 1/n)."""
    delta = as_scalar(delta)
    if delta <= 0:
        raise ConfigError("delta must be positive")
    if n < 2:
        raise ConfigError("n must be >= 2")
    return min(
        Fraction(n - 1, n + 1),
        delta / (n + 1 - delta),
        Fraction(1, n),
    )


@dataclass(frozen=True)
class ClosingSeriesReport:
    beta: Fraction
    threshold: Fraction
    t_start: int
    t_certified: int  # eps(t) * min-bound >= 1 for all t >= this
    rates: tuple[Fraction, Fraction, Fraction]  # per-branch decay exponents
    dominant: int  # index of the branch carrying the tail
    terms: tuple[float, ...]
    partial_sum: float
    tail: float
    ratio_log2: Fraction  # the tail ratio is 2^(-this)


def closing_series(
    consts: NondivConstants, beta, T: int, t_start: int = 1
) -> ClosingSeriesReport:
    """The summable series of reciprocal orbit bounds along
    eps(t) = 2^{-beta t}.

    Terms are the max of three exactly-represented decaying branches; a
    single certified comparison past the computed range shows the max is
    one geometric branch from there on, so the tail is closed-form.  The
    start t0 for eps(t) * min-bound >= 1 is found by exact bisection and
    re-verified term by term up to t = 60.
    """
    n = consts.n
    delta = consts.delta
    beta = as_scalar(beta)
    thresh = beta_threshold(n, delta)
    if not 0 < beta < thresh:
        raise ConfigError("beta must lie strictly below the threshold")
    if T < t_start or t_start < 0:
        raise ConfigError("need at least one term")
    # reciprocals of eps * b_i with eps = 2^{-beta t}:
    #   1/(eps b1) = C_B1^{-1} 2^{-r1 t},  r1 = delta/(n+1-delta) - beta
    #   1/(eps b2) =            2^{-r2 t},  r2 = (n-1) - beta (n+1)
    #   1/(eps b3) = C_B3^{-1} 2^{-r3 t},  r3 = 1 - beta n
    one = PowProd.from_scalar(1)
    heads = (one / consts.c_b1, one, one / PowProd.from_scalar(consts.c_b3))
    rates = (
        delta / (n + 1 - delta) - beta,
        Fraction(n - 1) - beta * (n + 1),
        Fraction(1) - beta * n,
    )
    assert all(r > 0 for r in rates)

    def branch(i: int, t: int) -> PowProd:
        return heads[i] * pow2(-rates[i] * t)

    def term(t: int) -> PowProd:
        vals = [branch(i, t) for i in range(3)]
        best = vals[0]
        for v in vals[1:]:
            if v.compare(best) > 0:
                best = v
        return best

    terms = [term(t) for t in range(t_start, T + 1)]
    # dominant branch: slowest decay, ties toward the larger head
    dominant = min(range(3), key=lambda i: (rates[i], -float(heads[i])))
    # pairwise ratios against the dominant branch decay, so one exact
    # win at t = T+1 certifies every later t
    for i in range(3):
        if i == dominant:
            continue
        if rates[i] < rates[dominant]:
            raise ConfigError("dominance ordering failed")
        if branch(dominant, T + 1).compare(branch(i, T + 1)) < 0:
            raise BudgetError("branch crossover past the computed range")
    tail = float(branch(dominant, T + 1)) / (
        1.0 - 2.0 ** float(-rates[dominant])
    )
    t_cert = t_start
    for i in range(3):
        t_cert = max(t_cert, _first_t_at_least_one(one / heads[i], rates[i]))
    for t in range(t_cert, max(T, 60) + 1):
        low = powprod_min([one / branch(i, t) for i in range(3)])
        if low.compare(one) < 0:
            raise ConfigError("certified range failed an exact check")
    float_terms = tuple(float(v) for v in terms)
    return ClosingSeriesReport(
        beta, thresh, t_start, t_cert, rates, dominant,
        float_terms, math.fsum(float_terms), tail, rates[dominant],
    )


def _first_t_at_least_one(head: PowProd, rate: Fraction) -> int:
    """Smallest integer t >= 0 with head * 2^{rate t} >= 1; the product
    is increasing in t, so plain bisection applies."""
    one = PowProd.from_scalar(1)
    if head.compare(one) >= 0:
        return 0
    lo, hi = 0, 1
    while (head * pow2(rate * hi)).compare(one) < 0:
        hi *= 2
        if hi > 10**7:
            raise BudgetError("certification start out of range")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if (head * pow2(rate * mid)).compare(one) >= 0:
            hi = mid
        else:
            lo = mid
    return hi
