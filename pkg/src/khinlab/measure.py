"""Hit tests and measure estimation for the two shell regions, exact
single-q strip measures, the box counting bound, and tail bookkeeping.

Region membership for a sample x is decided exactly: the q-candidate
set for a shell is constructed with rational window arithmetic, the
scan kernel classifies each candidate with a float margin, and every
near-threshold candidate is re-decided with Fractions.  Estimates are
therefore exact per-sample indicators; Monte Carlo error enters only
through the sample set itself.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .affine import AffineForm, Box, sublevel_measure
from .diophantine import ApproxRate
from .errors import BudgetError, ConfigError, PrecisionError
from .exactnum import as_scalar, sqrt_bounds
from .flows import Hyperplane
from . import kernels

LESS = "LESS"
GEQ = "GEQ"

CHUNK = 4096  # samples per kernel call; fixed so results ignore worker count
MARGIN = 1e-11  # float-decision band; see error analysis in _scan.pyx
DEFAULT_STEP_BUDGET = 10**12
EXACT_Q_BUDGET = 2 * 10**6  # candidate q tuples for the general-n path
EXACT_OP_BUDGET = 5 * 10**7  # q-sample pairs for the general-n path
BORDER_CAP = 1 << 16
KERNEL_MAX_T = 12  # keeps the float error budget below MARGIN/2


@dataclass(frozen=True)
class Witness:
    p: int
    q: tuple[int, ...]
    value: Fraction


@dataclass(frozen=True)
class ShellSpec:
    t: int

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ConfigError("shell index must be >= 0")

    @property
    def lo(self) -> int:
        return 2**self.t

    @property
    def hi(self) -> int:
        return 2 ** (self.t + 1)

    def contains(self, q: Sequence[int]) -> bool:
        norm = max(abs(v) for v in q)
        return self.lo <= norm < self.hi


def _signed_order(limit: int) -> Iterator[int]:
    """0, 1, -1, 2, -2, ... up to +-limit."""
    yield 0
    for v in range(1, limit + 1):
        yield v
        yield -v


def _window_ints(alpha: Fraction, qn: int) -> list[int]:
    """Integers k with |k + alpha*qn| < 1, ascending."""
    center = -alpha * qn
    lo, hi = center - 1, center + 1
    start = math.floor(lo) + 1
    stop = math.ceil(hi) - 1
    return [k for k in range(start, stop + 1) if lo < k < hi]


def _side_ok(plane: Hyperplane, q: Sequence[int], side: str) -> bool:
    qn = q[-1]
    inside = all(
        abs(q[i - 1] + plane.alpha[i] * qn) < 1 for i in range(1, plane.n)
    )
    return inside if side == LESS else not inside


def _dot_point(plane: Hyperplane, q: Sequence[int], x: Sequence[Fraction]) -> Fraction:
    y = plane.point(x)
    return sum((qi * yi for qi, yi in zip(q, y)), Fraction(0))


def _nearest(value: Fraction) -> int:
    return math.floor(value + Fraction(1, 2))


def dist_to_int(value: Fraction) -> Fraction:
    r = value - math.floor(value)
    return min(r, 1 - r)


def hit_test(
    x: Sequence,
    plane: Hyperplane,
    t: int,
    psi: ApproxRate,
    side: str,
    q_budget: int = EXACT_Q_BUDGET,
) -> Witness | None:
    """First witness (p, q) with |p + q.y(x)| < psi(2^t) in the shell.

    Deterministic scan order: q_n in 0, 1, -1, 2, -2, ... order, then
    each lower coordinate in the same order; p is the nearest integer.
    """
    if side not in (LESS, GEQ):
        raise ConfigError(f"unknown side {side!r}")
    x = tuple(as_scalar(v) for v in x)
    shell = ShellSpec(t)
    theta = psi.psi_at_pow2(t).as_fraction()
    limit = shell.hi - 1
    count = (2 * limit + 1) ** plane.n
    if count > q_budget:
        raise BudgetError(f"shell needs {count} q candidates, budget {q_budget}")
    for qn in _signed_order(limit):
        for lower in product(*(list(_signed_order(limit)),) * (plane.n - 1)):
            q = lower + (qn,)
            if not shell.contains(q):
                continue
            if not _side_ok(plane, q, side):
                continue
            r = _dot_point(plane, q, x)
            p = -_nearest(r)
            value = abs(p + r)
            if value < theta:
                return Witness(p, q, value)
    return None


# ---------------------------------------------------------------------------
# exact strip measures (single q)


@dataclass(frozen=True)
class StripReport:
    measure: Fraction
    s_sq: Fraction  # squared Euclidean norm of the x-gradient
    s_float: float
    strip_count: int
    gradient: tuple[Fraction, ...]


def _strip_form(plane: Hyperplane, q: Sequence[int]) -> AffineForm:
    qn = q[-1]
    const = plane.alpha[0] * qn
    grad = tuple(
        q[i - 1] + plane.alpha[i] * qn for i in range(1, plane.n)
    )
    return AffineForm(const, grad)


def strip_measure_exact(
    box: Box, q: Sequence[int], plane: Hyperplane, theta
) -> StripReport:
    """Exact measure of {x in box : exists p, |p + q.y(x)| < theta}."""
    theta = as_scalar(theta)
    if theta <= 0:
        raise ConfigError("theta must be positive")
    if len(q) != plane.n:
        raise ConfigError("q length mismatch")
    form = _strip_form(plane, q)
    s_sq = sum((g * g for g in form.grad), Fraction(0))
    s_float = math.sqrt(float(s_sq))
    if all(g == 0 for g in form.grad):
        hit = dist_to_int(form.const) < theta
        measure = box.volume() if hit else Fraction(0)
        return StripReport(measure, s_sq, s_float, 1 if hit else 0, form.grad)
    if 2 * theta > 1:
        return StripReport(box.volume(), s_sq, s_float, 1, form.grad)
    lo, hi = form.range_over(box)
    measure = Fraction(0)
    strips = 0
    p = math.ceil(-hi - theta)
    while p <= math.floor(-lo + theta):
        piece = sublevel_measure(form.shift(p), box, theta)
        if piece > 0:
            strips += 1
            measure += piece
        p += 1
    return StripReport(measure, s_sq, s_float, strips, form.grad)


def strip_bound_check(
    box: Box, q: Sequence[int], plane: Hyperplane, theta,
    enclosure_eta=Fraction(1, 10**30),
) -> tuple[bool, Fraction, Fraction]:
    """Verify measure <= (S diam + 1) * (2 theta / S) * prod other sides,
    with S and diam(B) enclosed by rational square-root bounds.

    Returns (ok, lhs, certified rhs lower bound).  The gradient norm of
    the region side in use must be >= the strip direction; here S is the
    exact gradient norm, so the inequality is instance-exact.
    """
    theta = as_scalar(theta)
    rep = strip_measure_exact(box, q, plane, theta)
    if rep.s_sq == 0:
        # degenerate direction: the bound statement needs a gradient
        return True, rep.measure, box.volume()
    s_lo, s_hi = sqrt_bounds(rep.s_sq, enclosure_eta)
    d_lo, d_hi = sqrt_bounds(box.diameter_sq(), enclosure_eta)
    lengths = sorted(box.lengths)
    prod_other = Fraction(1)
    for side_len in lengths[:-1]:
        prod_other *= side_len
    # rhs = (S*diam + 1) * 2 theta / S * prod_other, minimized over the
    # enclosures: diam from below, the 1/S term from above
    rhs_lo = (d_lo + 1 / s_hi) * 2 * theta * prod_other
    rhs_hi = (d_hi + 1 / s_lo) * 2 * theta * prod_other
    if rep.measure <= rhs_lo:
        return True, rep.measure, rhs_lo
    if rep.measure > rhs_hi:
        return False, rep.measure, rhs_lo
    raise PrecisionError("enclosure too wide to decide the strip bound")


# ---------------------------------------------------------------------------
# samplers


@dataclass(frozen=True)
class MCSampler:
    count: int
    seed: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError("sample count must be >= 1")


@dataclass(frozen=True)
class GridSampler:
    per_dim: int

    def __post_init__(self) -> None:
        if self.per_dim < 1:
            raise ConfigError("grid resolution must be >= 1")


def parse_sampler(text: str):
    parts = text.strip().lower().split(":")
    if parts[0] == "mc" and len(parts) == 3:
        return MCSampler(int(parts[1]), int(parts[2]))
    if parts[0] == "grid" and len(parts) == 2:
        return GridSampler(int(parts[1]))
    raise ConfigError(f"bad sampler spec {text!r} (want mc:N:seed or grid:k)")


def sample_points(box: Box, sampler) -> list[tuple[Fraction, ...]]:
    """Deterministic exact sample coordinates.

    MC draws float64 uniforms from a seeded PCG64 stream and keeps the
    dyadic rationals those floats denote; GRID uses cell midpoints in
    lexicographic order.
    """
    d = box.dim
    if isinstance(sampler, MCSampler):
        rng = np.random.Generator(np.random.PCG64(sampler.seed))
        u = rng.random((sampler.count, d))
        pts = []
        for row in u:
            pts.append(
                tuple(
                    lo + Fraction(float(v)) * length
                    for v, (lo, _), length in zip(
                        row, box.sides, box.lengths
                    )
                )
            )
        return pts
    if isinstance(sampler, GridSampler):
        k = sampler.per_dim
        axes = []
        for (lo, _), length in zip(box.sides, box.lengths):
            axes.append([lo + Fraction(2 * i + 1, 2 * k) * length for i in range(k)])
        return [tuple(p) for p in product(*axes)]
    raise ConfigError(f"unknown sampler {sampler!r}")


# ---------------------------------------------------------------------------
# candidate construction (n = 2 kernel path)


def _subtract_window(segments, window):
    """Remove window integers from [a,b] integer segments."""
    out = []
    for a, b in segments:
        cur = a
        for w in window:
            if w < cur or w > b:
                continue
            if w > cur:
                out.append((cur, w - 1))
            cur = w + 1
        if cur <= b:
            out.append((cur, b))
    return out


def _intersect_window(segments, window):
    out = []
    for w in window:
        if any(a <= w <= b for a, b in segments):
            out.append((w, w))
    return out


def build_runs_n2(
    plane: Hyperplane, t: int, side: str, mode: str = "shell"
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Exact q-candidate runs for n = 2 as flat arrays.

    mode 'shell': ||q|| in [2^t, 2^{t+1}); mode 'box': ||q|| < 2^t with
    q != 0 (the small-window set used by the covering check).  Runs per
    q2 are maximal integer segments of valid q1.
    """
    if plane.n != 2:
        raise ConfigError("runs builder is the n = 2 fast path")
    if side not in (LESS, GEQ):
        raise ConfigError(f"unknown side {side!r}")
    alpha1 = plane.alpha[1]
    q2_vals: list[int] = []
    ptr = [0]
    starts: list[int] = []
    lens: list[int] = []
    if mode == "shell":
        outer = 2 ** (t + 1) - 1
    elif mode == "box":
        outer = 2**t - 1
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    for q2 in range(-outer, outer + 1):
        if mode == "shell":
            if abs(q2) >= 2**t:
                segments = [(-outer, outer)]
            else:
                segments = [(-outer, -(2**t)), (2**t, outer)]
        else:
            segments = [(-outer, outer)] if outer >= 0 else []
        window = _window_ints(alpha1, q2)
        if side == LESS:
            runs = _intersect_window(segments, window)
        else:
            runs = _subtract_window(segments, window)
        if mode == "box" and q2 == 0:
            runs = _subtract_window(runs, [0])
        for a, b in runs:
            starts.append(a)
            lens.append(b - a + 1)
        q2_vals.append(q2)
        ptr.append(len(starts))
    return (
        np.array(q2_vals, dtype=np.int64),
        np.array(ptr, dtype=np.int64),
        np.array(starts, dtype=np.int64),
        np.array(lens, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# the estimator


@dataclass(frozen=True)
class EstimateReport:
    t: int
    side: str
    samples: int
    hits: int
    estimate: Fraction  # (hits/samples) * vol(B)
    ci: tuple[float, float] | None  # 4-sigma Wald interval, scaled
    volume: Fraction
    backend: str
    steps: int
    border_count: int

    @property
    def est_float(self) -> float:
        return float(self.estimate)


def _resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get("KHINLAB_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"bad KHINLAB_WORKERS {env!r}") from exc
    return 4


def _exact_hit(plane, q_list, x, theta) -> bool:
    for q in q_list:
        if dist_to_int(_dot_point(plane, q, x)) < theta:
            return True
    return False


def _enumerate_side_qs(plane: Hyperplane, t: int, side: str,
                       budget: int) -> list[tuple[int, ...]]:
    shell = ShellSpec(t)
    limit = shell.hi - 1
    count = (2 * limit + 1) ** plane.n
    if count > budget:
        raise BudgetError(
            f"general-n path needs {count} q candidates, budget {budget}"
        )
    out = []
    for q in product(range(-limit, limit + 1), repeat=plane.n):
        if shell.contains(q) and _side_ok(plane, q, side):
            out.append(q)
    return out


def _kernel_chunk(args):
    (xs, gs, q2v, ptr, starts, lens, theta_f, max_steps, plane,
     theta, samples_exact) = args
    n_chunk = xs.shape[0]
    hits = np.zeros(n_chunk, dtype=np.uint8)
    border = np.zeros(3 * BORDER_CAP, dtype=np.int64)
    bcount, steps, overflow = kernels.scan_hits(
        xs, gs, q2v, ptr, starts, lens, theta_f, MARGIN, max_steps,
        hits, border,
    )
    if overflow == 1:
        raise BudgetError("scan step budget exceeded")
    if overflow == 2:
        raise PrecisionError("border buffer overflow: threshold too aligned")
    for b in range(bcount):
        i = int(border[3 * b])
        j = int(border[3 * b + 1])
        q1 = int(border[3 * b + 2])
        if hits[i]:
            continue
        x = samples_exact[i]
        q2 = int(q2v[j])
        value = dist_to_int(
            q1 * x[0] + q2 * (plane.alpha[0] + plane.alpha[1] * x[0])
        )
        if value < theta:
            hits[i] = 1
    return hits, steps, bcount


def estimate_region_measure(
    box: Box,
    plane: Hyperplane,
    t: int,
    psi: ApproxRate,
    side: str,
    sampler,
    restrict_qs: Sequence[Sequence[int]] | None = None,
    workers: int | None = None,
    max_steps: int = DEFAULT_STEP_BUDGET,
    force_path: str | None = None,
    theta_override=None,
    mode: str = "shell",
) -> EstimateReport:
    """Fraction of sample points admitting a shell witness, times vol(B).

    Per-sample membership is exact (see module docstring).  The Monte
    Carlo confidence interval is a 4-sigma Wald interval.
    """
    if side not in (LESS, GEQ):
        raise ConfigError(f"unknown side {side!r}")
    if box.dim != plane.n - 1:
        raise ConfigError("box dimension must be n - 1")
    theta = (
        as_scalar(theta_override)
        if theta_override is not None
        else psi.psi_at_pow2(t).as_fraction()
    )
    if theta <= 0:
        raise ConfigError("threshold must be positive")
    samples = sample_points(box, sampler)
    n_samples = len(samples)
    vol = box.volume()
    backend = "exact"
    steps = 0
    border_total = 0

    if restrict_qs is not None:
        q_list = [tuple(int(v) for v in q) for q in restrict_qs]
        hit_count = sum(
            1 for x in samples if _exact_hit(plane, q_list, x, theta)
        )
    elif force_path == "exact" or (plane.n != 2 and force_path is None):
        q_list = _enumerate_side_qs(plane, t, side, EXACT_Q_BUDGET)
        if len(q_list) * n_samples > EXACT_OP_BUDGET:
            raise BudgetError(
                "general-n exact path too large; restrict qs or reduce samples"
            )
        hit_count = sum(
            1 for x in samples if _exact_hit(plane, q_list, x, theta)
        )
    else:
        if plane.n != 2:
            raise ConfigError("kernel path requires n = 2")
        if t > KERNEL_MAX_T:
            raise BudgetError(f"kernel path limited to t <= {KERNEL_MAX_T}")
        if 2 * theta > 1:
            # distance to the integers never exceeds 1/2
            run_arrays = build_runs_n2(plane, t, side, mode)
            has_q = int(run_arrays[3].sum()) > 0
            hit_count = n_samples if has_q else 0
            backend = "shortcut"
            report_ci = _wald_ci(hit_count, n_samples, vol)
            return EstimateReport(
                t, side, n_samples, hit_count,
                Fraction(hit_count, n_samples) * vol, report_ci, vol,
                backend, 0, 0,
            )
        if theta <= 10 * Fraction(MARGIN):
            raise PrecisionError("threshold too small for the margin protocol")
        q2v, ptr, starts, lens = build_runs_n2(plane, t, side, mode)
        theta_f = float(theta)
        backend = kernels.backend_name()
        x_frac = [x[0] - math.floor(x[0]) for x in samples]
        g_frac = [
            (plane.alpha[0] + plane.alpha[1] * x[0])
            - math.floor(plane.alpha[0] + plane.alpha[1] * x[0])
            for x in samples
        ]
        chunks = []
        n_chunks = (n_samples + CHUNK - 1) // CHUNK
        per_chunk_budget = max_steps // max(1, n_chunks)
        for c in range(n_chunks):
            sl = slice(c * CHUNK, min((c + 1) * CHUNK, n_samples))
            xs = np.array([float(v) for v in x_frac[sl]], dtype=np.float64)
            gs = np.array([float(v) for v in g_frac[sl]], dtype=np.float64)
            chunks.append(
                (xs, gs, q2v, ptr, starts, lens, theta_f, per_chunk_budget,
                 plane, theta, samples[sl])
            )
        n_workers = _resolve_workers(workers)
        if n_workers == 1:
            results = [_kernel_chunk(c) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(_kernel_chunk, chunks))
        hit_count = 0
        for hits, chunk_steps, bcount in results:
            hit_count += int(hits.sum())
            steps += chunk_steps
            border_total += bcount

    estimate = Fraction(hit_count, n_samples) * vol
    ci = _wald_ci(hit_count, n_samples, vol) if isinstance(
        sampler, MCSampler
    ) else None
    return EstimateReport(
        t, side, n_samples, hit_count, estimate, ci, vol, backend,
        steps, border_total,
    )


def _wald_ci(hits: int, n: int, vol: Fraction) -> tuple[float, float]:
    p = hits / n
    se = math.sqrt(p * (1 - p) / n)
    lo = max(0.0, p - 4 * se) * float(vol)
    hi = min(1.0, p + 4 * se) * float(vol)
    return (lo, hi)


# ---------------------------------------------------------------------------
# the counting bound


def box_counting_constant(box: Box, n: int) -> Fraction:
    """C(n, B) for the shell count: per-q strip total is at most
    (sum of sides + 2) * 2 theta * max_i prod_{j != i} sides, using that
    the constraint side guarantees a gradient component >= 1."""
    lengths = box.lengths
    total = sum(lengths, Fraction(0))
    if len(lengths) == 1:
        max_prod = Fraction(1)
    else:
        prods = []
        for i in range(len(lengths)):
            p = Fraction(1)
            for j, l in enumerate(lengths):
                if j != i:
                    p *= l
            prods.append(p)
        max_prod = max(prods)
    return 2 * (total + 2) * max_prod


@dataclass(frozen=True)
class Theorem31Row:
    t: int
    estimate: Fraction
    ci: tuple[float, float] | None
    bound: Fraction
    margin: Fraction
    ok: bool


def theorem31_report(
    box: Box,
    plane: Hyperplane,
    psi: ApproxRate,
    t_range: Sequence[int],
    sampler,
    workers: int | None = None,
    max_steps: int = DEFAULT_STEP_BUDGET,
) -> list[Theorem31Row]:
    """Per t: measured |M_geq| estimate against C(n,B) 4^n psi(2^t) 2^{nt}."""
    n = plane.n
    c_box = box_counting_constant(box, n)
    rows = []
    for t in t_range:
        est = estimate_region_measure(
            box, plane, t, psi, GEQ, sampler, workers=workers,
            max_steps=max_steps,
        )
        bound = (
            c_box * Fraction(4) ** n
            * psi.psi_at_pow2(t).as_fraction()
            * Fraction(2) ** (n * t)
        )
        rows.append(
            Theorem31Row(
                t, est.estimate, est.ci, bound, bound - est.estimate,
                est.estimate <= bound,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# tail bookkeeping


@dataclass(frozen=True)
class BorelCantelliReport:
    partial_sums: tuple[Fraction, ...]
    tail: Fraction | None  # certified sum past the last provided term
    divergent: bool
    ratio: Fraction | None


def borel_cantelli_tail(
    terms: Sequence, ratio=None
) -> BorelCantelliReport:
    """Exact partial sums of nonnegative terms plus a geometric tail.

    With `ratio` r in (0,1) the sequence is continued geometrically past
    the last term: tail = last * r / (1 - r).  Without it, a constant
    consecutive ratio is detected; otherwise the tail is None.  r >= 1
    sets the divergent flag.
    """
    vals = [as_scalar(v) for v in terms]
    if any(v < 0 for v in vals):
        raise ConfigError("terms must be nonnegative")
    sums = []
    acc = Fraction(0)
    for v in vals:
        acc += v
        sums.append(acc)
    r = as_scalar(ratio) if ratio is not None else _detect_ratio(vals)
    if not vals or all(v == 0 for v in vals):
        return BorelCantelliReport(tuple(sums), Fraction(0), False, r)
    if r is None:
        return BorelCantelliReport(tuple(sums), None, False, None)
    if r >= 1:
        return BorelCantelliReport(tuple(sums), None, True, r)
    if r < 0:
        raise ConfigError("ratio must be nonnegative")
    tail = vals[-1] * r / (1 - r)
    return BorelCantelliReport(tuple(sums), tail, False, r)


def _detect_ratio(vals) -> Fraction | None:
    # three terms minimum: a single consecutive ratio is no evidence of
    # a geometric continuation
    nonzero = [v for v in vals if v != 0]
    if len(nonzero) != len(vals) or len(vals) < 3:
        return None
    ratios = {b / a for a, b in zip(vals, vals[1:])}
    if len(ratios) == 1:
        return ratios.pop()
    return None
