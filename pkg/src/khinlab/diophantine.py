"""Approximation-rate functions, convergence tests for sum k^{n-1} psi(k),
empirical Diophantine diagnostics for a coefficient vector, and the
dimension lower-bound formula.

Coefficient vectors are exact rationals, possibly recorded as an
approximation of an irrational target with width eta; every scan is then
exact integer arithmetic on a common denominator, and a guard keeps the
scan range small enough that the approximation cannot change any
reported digit: Q^{n+1} eta < 10^-3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetError, ConfigError, PrecisionError
from .exactnum import as_scalar
from .powcmp import PowProd

Q_LIMIT = 10**7  # exhaustive scans above this are a config mistake
DELTA_GRID_STEP = Fraction(1, 100)
DEFAULT_MAX_EXCEPTIONS = 10


@dataclass(frozen=True)
class ApproxRate:
    """psi(k) = c k^-a (log k)^-b for k >= 2 with psi(1) = c, or a
    tabulated nonincreasing sequence (table[k-1] = psi(k))."""

    c: Fraction
    a: Fraction
    b: Fraction
    table: tuple[Fraction, ...] | None = None

    def __post_init__(self) -> None:
        if self.table is not None:
            if not self.table:
                raise ConfigError("empty table")
            if any(v <= 0 for v in self.table):
                raise ConfigError("tabulated rate must be positive")
            if any(
                x < y for x, y in zip(self.table, self.table[1:])
            ):
                raise ConfigError("tabulated rate must be nonincreasing")
        elif self.c <= 0:
            raise ConfigError("rate constant must be positive")

    @classmethod
    def power(cls, c, a, b=0) -> "ApproxRate":
        return cls(as_scalar(c), as_scalar(a), as_scalar(b))

    @classmethod
    def psi0(cls, n: int) -> "ApproxRate":
        """The canonical rate k^-n."""
        return cls.power(1, n)

    @classmethod
    def tabulated(cls, values: Sequence) -> "ApproxRate":
        return cls(
            Fraction(1), Fraction(0), Fraction(0),
            tuple(as_scalar(v) for v in values),
        )

    @property
    def is_tabulated(self) -> bool:
        return self.table is not None

    def psi_float(self, k: int) -> float:
        if k < 1:
            raise ConfigError("psi argument must be >= 1")
        if self.table is not None:
            if k > len(self.table):
                raise ConfigError("tabulated rate exhausted")
            return float(self.table[k - 1])
        if k == 1:
            return float(self.c)
        return float(self.c) * k ** (-float(self.a)) * math.log(k) ** (
            -float(self.b)
        )

    def psi_powprod(self, k: int) -> PowProd:
        """Exact value as a power product; requires b = 0."""
        if self.table is not None:
            if k > len(self.table):
                raise ConfigError("tabulated rate exhausted")
            return PowProd.from_factors([(self.table[k - 1], Fraction(1))])
        if self.b != 0:
            raise ConfigError("log factor has no exact power-product form")
        if k < 1:
            raise ConfigError("psi argument must be >= 1")
        factors = [(self.c, Fraction(1))]
        if k > 1:
            factors.append((Fraction(k), -self.a))
        return PowProd.from_factors(factors)

    def psi_at_pow2(self, t: int) -> PowProd:
        """Exact psi(2^t); the workhorse for shell thresholds."""
        if self.table is not None:
            return self.psi_powprod(2**t)
        if self.b != 0:
            raise ConfigError("log factor has no exact power-product form")
        factors = [(self.c, Fraction(1))]
        if t > 0:
            factors.append((Fraction(2), -self.a * t))
        return PowProd.from_factors(factors)

    def psi_fraction_at_pow2(self, t: int) -> Fraction:
        """psi(2^t) as an exact rational; requires a*t integral and b=0."""
        return self.psi_at_pow2(t).as_fraction()


def parse_rate(text: str) -> ApproxRate:
    """Parse 'c,a,b' or 'c,a' or 'psi0:<n>'."""
    text = text.strip()
    if text.startswith("psi0:"):
        return ApproxRate.psi0(int(text[5:]))
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 2:
        return ApproxRate.power(parts[0], parts[1])
    if len(parts) == 3:
        return ApproxRate.power(parts[0], parts[1], parts[2])
    raise ConfigError(f"bad rate spec {text!r}")


@dataclass(frozen=True)
class SeriesReport:
    verdict: str  # CONVERGES / DIVERGES / INDETERMINATE
    n: int
    terms: int
    partial_sum: float
    tail_bound: PowProd | None  # certified bound on the sum past `terms`
    tail_bound_float: float | None


def series_converges(
    psi: ApproxRate, n: int, terms: int = 10_000
) -> SeriesReport:
    """Closed-form verdict for sum_k k^{n-1} psi(k) plus partial-sum and
    certified-tail data.

    The tail bound comes from integral comparison: the summand is
    decreasing past k = 2 in every convergent case, so the remainder
    after T is at most the integral from T.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if terms < 2:
        raise ConfigError("need at least 2 terms")
    partial = _partial_sum(psi, n, terms)
    if psi.is_tabulated:
        if terms < len(psi.table):
            partial = _partial_sum(psi, n, len(psi.table))
        return SeriesReport("INDETERMINATE", n, min(terms, len(psi.table)),
                            partial, None, None)
    a, b, c = psi.a, psi.b, psi.c
    if a > n or (a == n and b > 1):
        verdict = "CONVERGES"
    else:
        verdict = "DIVERGES"
    tail = None
    tail_float = None
    T = terms
    if verdict == "CONVERGES":
        if b == 0:
            # integral_T^inf c x^{n-1-a} dx = c T^{n-a} / (a-n)
            tail = PowProd.from_factors(
                [(c / (a - n), Fraction(1)), (Fraction(T), n - a)]
            )
            tail_float = float(tail)
        elif b > 0 and a > n:
            # (log x)^-b <= (log T)^-b on the tail
            tail_float = (
                float(c)
                * math.log(T) ** (-float(b))
                * T ** float(n - a)
                / float(a - n)
            )
        elif b > 1 and a == n:
            # integral_T^inf x^-1 (log x)^-b dx, exactly
            tail_float = float(c) * math.log(T) ** (1 - float(b)) / (
                float(b) - 1
            )
    return SeriesReport(verdict, n, terms, partial, tail, tail_float)


def _partial_sum(psi: ApproxRate, n: int, terms: int) -> float:
    import numpy as np

    if psi.is_tabulated:
        stop = min(terms, len(psi.table))
        k = np.arange(1, stop + 1, dtype=np.float64)
        vals = np.array([float(v) for v in psi.table[:stop]])
        return float(np.sum(k ** (n - 1) * vals))
    k = np.arange(2, terms + 1, dtype=np.float64)
    body = (
        float(psi.c)
        * k ** (n - 1 - float(psi.a))
        * np.log(k) ** (-float(psi.b))
    )
    return float(psi.c) + float(np.sum(body))


# ---------------------------------------------------------------------------
# coefficient-vector scans


def _coeffs(A) -> tuple[tuple[Fraction, ...], Fraction | None]:
    """Accept a Hyperplane-like object or a plain sequence of scalars."""
    if hasattr(A, "alpha"):
        return tuple(A.alpha), A.precision
    return tuple(as_scalar(v) for v in A), None


def _guard(alphas, eta, Q: int) -> None:
    if Q < 2:
        raise ConfigError("Q must be >= 2")
    if Q > Q_LIMIT:
        raise BudgetError(f"Q = {Q} beyond scan limit {Q_LIMIT}")
    if eta is not None and eta > 0:
        n = len(alphas)
        if Fraction(Q) ** (n + 1) * eta >= Fraction(1, 1000):
            raise PrecisionError(
                "recorded precision too coarse for this Q: need "
                f"Q^{n + 1} * eta < 1/1000"
            )


def _common_denominator(alphas):
    den = math.lcm(*(a.denominator for a in alphas))
    nums = [int(a.numerator * (den // a.denominator)) for a in alphas]
    return nums, den


def best_value(A, q: int) -> Fraction:
    """max_i dist(alpha_i q, Z), minimized over integer p coordinatewise."""
    alphas, _ = _coeffs(A)
    nums, den = _common_denominator(alphas)
    return Fraction(_best_numerator(nums, den, abs(q)), den)


def _best_numerator(nums, den: int, q: int) -> int:
    best = 0
    for num in nums:
        r = (num * q) % den
        d = min(r, den - r)
        if d > best:
            best = d
    return best


@dataclass(frozen=True)
class ExponentRecord:
    q: int
    best_value: Fraction
    local_exponent: float  # -log(best)/log q; inf on exact zero


@dataclass(frozen=True)
class ExponentReport:
    omega_hat: float  # -log(min best)/log Q; inf on exact zero
    q_max: int
    min_best: Fraction
    argmin_q: int
    sentinel_q: int | None  # first q with an exact integer hit
    records: tuple[ExponentRecord, ...]  # running-min records, ascending q


def _log_fraction(num: int, den: int) -> float:
    return math.log(num) - math.log(den)


def dioph_exponent_estimate(A, Q: int, keep_all: bool = False) -> ExponentReport:
    """Scan q = 2..Q; omega_hat = -log(min_q best)/log Q.

    Records hold every q improving the running minimum (or every q with
    keep_all), sorted ascending.
    """
    alphas, eta = _coeffs(A)
    _guard(alphas, eta, Q)
    nums, den = _common_denominator(alphas)
    records = []
    min_best = None
    argmin_q = 0
    sentinel_q = None
    for q in range(2, Q + 1):
        bn = _best_numerator(nums, den, q)
        improved = min_best is None or bn < min_best
        if improved:
            min_best = bn
            argmin_q = q
        if bn == 0 and sentinel_q is None:
            sentinel_q = q
        if improved or keep_all:
            expo = (
                math.inf if bn == 0 else -_log_fraction(bn, den) / math.log(q)
            )
            records.append(ExponentRecord(q, Fraction(bn, den), expo))
        if bn == 0 and not keep_all:
            break  # the minimum cannot improve further
    omega = (
        math.inf
        if min_best == 0
        else -_log_fraction(min_best, den) / math.log(Q)
    )
    return ExponentReport(
        omega, Q, Fraction(min_best, den), argmin_q, sentinel_q,
        tuple(records),
    )


@dataclass(frozen=True)
class DeltaMarginReport:
    delta: Fraction
    exceptional_qs: tuple[int, ...]  # positive representatives, ascending
    condition2_holds: bool  # false when no positive margin fits the cap
    q_max: int
    n: int


def delta_margin(
    A, Q: int, max_exceptions: int = DEFAULT_MAX_EXCEPTIONS
) -> DeltaMarginReport:
    """Largest grid delta (step 1/100) such that
    best(q) * q^(n - delta) > 1 for all 2 <= q <= Q outside the
    exceptional set.

    Exceptions are not spent to enlarge delta: only q violating at the
    bottom of the grid (delta = 1/100, where no positive margin could
    survive) are absorbed, smallest q first, up to max_exceptions; when
    they overflow the cap, delta is 0 and the condition is flagged as
    failing.  best(-q) = best(q), so positive q represent both signs.
    """
    alphas, eta = _coeffs(A)
    _guard(alphas, eta, Q)
    n = len(alphas)
    nums, den = _common_denominator(alphas)
    grid_max = 100 * n
    den100 = den**100

    # First grid index at which q starts violating, pinned exactly at the
    # boundary; violation is upward-monotone in the grid index, so a float
    # estimate plus a short exact walk suffices.
    thresholds: list[tuple[int, int]] = []  # (grid index, q)
    for q in range(2, Q + 1):
        bn = _best_numerator(nums, den, q)
        if bn == 0:
            thresholds.append((0, q))
            continue
        bn100 = bn**100

        def violates(grid: int) -> bool:
            # best * q^{n - grid/100} <= 1
            return bn100 * q ** (100 * n - grid) <= den100

        est = 100 * (n + _log_fraction(bn, den) / math.log(q))
        g = max(0, min(grid_max, math.floor(est)))
        if violates(g):
            while g > 0 and violates(g - 1):
                g -= 1
            first_bad = g
        else:
            while g < grid_max and not violates(g + 1):
                g += 1
            first_bad = g + 1
        if first_bad <= grid_max:
            thresholds.append((first_bad, q))
    bottom = sorted(q for g, q in thresholds if g <= 1)
    over = len(bottom) > max_exceptions
    exceptional = tuple(bottom[:max_exceptions]) if over else tuple(bottom)
    if over:
        delta = Fraction(0)
    else:
        rest = [g for g, q in thresholds if g > 1]
        delta = Fraction(min(rest, default=grid_max) - 1, 100)
    return DeltaMarginReport(delta, exceptional, delta > 0, Q, n)


@dataclass(frozen=True)
class WMembershipReport:
    v: Fraction
    q_max: int
    count: int
    qs: tuple[int, ...]


def w_membership_diagnostic(A, v, Q: int) -> WMembershipReport:
    """Exact count and list of 1 <= q <= Q with best(q) < q^-v."""
    alphas, eta = _coeffs(A)
    _guard(alphas, eta, Q)
    v = as_scalar(v)
    s = v.denominator
    vn = v.numerator
    nums, den = _common_denominator(alphas)
    hits = []
    for q in range(1, Q + 1):
        bn = _best_numerator(nums, den, q)
        # bn/den < q^{-v}  <=>  bn^s q^{vn} < den^s   (v = vn/s, q >= 1)
        if vn >= 0:
            ok = bn**s * q**vn < den**s
        else:
            ok = bn**s < den**s * q**(-vn)
        if ok:
            hits.append(q)
    return WMembershipReport(v, Q, len(hits), tuple(hits))


def dd_dim_bound(psi: ApproxRate, n: int, m: int) -> Fraction:
    """m - 1 + (n+1)/(lambda+1) with lambda the lower order of 1/psi,
    which is the power-family exponent a.  Requires lambda >= n."""
    if psi.is_tabulated:
        raise ConfigError("dimension bound needs the power-family exponent")
    if n < 1 or m < 1:
        raise ConfigError("n and m must be >= 1")
    lam = psi.a
    if lam < n:
        raise ConfigError(
            f"hypothesis violated: lower order {lam} < n = {n}"
        )
    return m - 1 + Fraction(n + 1, 1) / (lam + 1)
