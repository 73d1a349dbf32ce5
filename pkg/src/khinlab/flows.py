"""Diagonal flows and unipotent point maps on the 2n-dimensional ambient
space, plus their projected (n+1)-dimensional counterparts.

Basis order for the ambient space: position 0 is e_0, positions 1..n-1
are the starred directions e_*1..e_*(n-1), positions n..2n-1 are
e_1..e_n.  The projected space keeps (e_0, e_1..e_n) in that order.
The point map is unipotent, differing from the identity only in the
e_0 row, so orbits of constant multivectors have components affine in
the box variables; `flow_orbit` exploits that splitting and returns an
`AffineMultivector` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .affine import AffineForm, AffineMultivector
from .errors import ConfigError
from .exactnum import as_scalar, preset_value
from .exterior import Multivector, mask_of


@dataclass(frozen=True)
class Hyperplane:
    """Coefficient vector (alpha_0, ..., alpha_{n-1}) of the graph map
    x -> (x, alpha_0 + alpha_1 x_1 + ... + alpha_{n-1} x_{n-1})."""

    alpha: tuple[Fraction, ...]
    precision: Fraction | None = None  # stored approximation width, if any

    def __post_init__(self) -> None:
        if len(self.alpha) < 2:
            raise ConfigError("hyperplane needs n >= 2 coefficients")

    @classmethod
    def build(cls, values: Sequence, precision=None) -> "Hyperplane":
        prec = None if precision is None else as_scalar(precision)
        return cls(tuple(as_scalar(v) for v in values), prec)

    @classmethod
    def from_spec(cls, text: str) -> "Hyperplane":
        """Parse comma-separated rationals or preset names, e.g.
        ``sqrt2m1,sqrt3m1@1e-40`` or ``0,1/2``."""
        parts = [p.strip() for p in text.split(",")]
        precision = None
        if parts and "@" in parts[-1]:
            parts[-1], _, prec_text = parts[-1].partition("@")
            precision = as_scalar(prec_text)
        values = []
        used_preset = False
        eta = precision if precision is not None else Fraction(1, 10**30)
        for part in parts:
            from .exactnum import PRESET_NAMES

            if part in PRESET_NAMES:
                values.append(preset_value(part, eta))
                used_preset = True
            else:
                values.append(as_scalar(part))
        return cls(tuple(values), eta if used_preset else None)

    @property
    def n(self) -> int:
        return len(self.alpha)

    def graph_value(self, x: Sequence[Fraction]) -> Fraction:
        if len(x) != self.n - 1:
            raise ConfigError("point dimension mismatch")
        return self.alpha[0] + sum(
            (a * xi for a, xi in zip(self.alpha[1:], x)), Fraction(0)
        )

    def point(self, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(x) + (self.graph_value(x),)


@dataclass(frozen=True)
class FlowParams:
    """Expansion scale eps in (0, 1] and shell exponent t >= 1.

    Degenerate values (eps = 1 boundary included, t = 0) are only for
    unit tests; construct with test_mode=True to allow them.
    """

    eps: Fraction
    t: int
    test_mode: bool = False

    def __post_init__(self) -> None:
        if self.test_mode:
            if not 0 < self.eps <= 1 or self.t < 0:
                raise ConfigError("flow parameters out of range")
        elif not 0 < self.eps < 1 or self.t < 1:
            raise ConfigError("flow parameters out of range (eps in (0,1), t >= 1)")

    @classmethod
    def build(cls, eps, t: int, test_mode: bool = False) -> "FlowParams":
        return cls(as_scalar(eps), t, test_mode)


@dataclass(frozen=True)
class BasisLabel:
    """Symbolic basis direction: e0, a starred e*i, or a standard ei."""

    kind: str  # "e0", "star", "std"
    index: int = 0

    def position(self, n: int) -> int:
        if self.kind == "e0":
            return 0
        if self.kind == "star":
            if not 1 <= self.index <= n - 1:
                raise ConfigError("starred index out of range")
            return self.index
        if self.kind == "std":
            if not 1 <= self.index <= n:
                raise ConfigError("standard index out of range")
            return (n - 1) + self.index
        raise ConfigError(f"unknown basis kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "e0":
            return "e0"
        return f"e*{self.index}" if self.kind == "star" else f"e{self.index}"


def basis_labels(n: int) -> tuple[BasisLabel, ...]:
    """Ambient labels in position order."""
    return (
        (BasisLabel("e0"),)
        + tuple(BasisLabel("star", i) for i in range(1, n))
        + tuple(BasisLabel("std", i) for i in range(1, n + 1))
    )


def build_D(params: FlowParams, n: int) -> tuple[Fraction, ...]:
    """Diagonal of the expansion map on the ambient 2n-space."""
    eps, t = params.eps, params.t
    grow = eps * Fraction(2) ** (n * t)
    shrink = eps * Fraction(1, 2**t)
    return (grow,) + (eps,) * (n - 1) + (shrink,) * n


def build_D_hat(params: FlowParams, n: int) -> tuple[Fraction, ...]:
    """Diagonal of the projected expansion map on n+1 coordinates."""
    eps, t = params.eps, params.t
    return (eps * Fraction(2) ** (n * t),) + (eps * Fraction(1, 2**t),) * n


def _f_hat(plane: Hyperplane, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """(x_1, ..., x_{n-1}, alpha_0 + sum alpha_i x_i)."""
    return tuple(x) + (plane.graph_value(x),)


def build_u(plane: Hyperplane, x: Sequence[Fraction]) -> list[list[Fraction]]:
    """Unipotent point map on the ambient 2n-space at the point x."""
    n = plane.n
    dim = 2 * n
    f = _f_hat(plane, x)
    m = [[Fraction(1) if i == j else Fraction(0) for j in range(dim)] for i in range(dim)]
    for i in range(1, n):
        col = (n - 1) + i
        m[0][col] = f[i - 1]  # x_i lands on e_0
        m[i][col] = Fraction(1)  # and on the matching starred direction
    col_n = 2 * n - 1
    m[0][col_n] = f[n - 1]
    for i in range(1, n):
        m[i][col_n] = plane.alpha[i]
    return m


def build_u_hat(plane: Hyperplane, x: Sequence[Fraction]) -> list[list[Fraction]]:
    """Projected point map [[1, f^(x)], [0, I_n]] on n+1 coordinates."""
    n = plane.n
    f = _f_hat(plane, x)
    m = [
        [Fraction(1) if i == j else Fraction(0) for j in range(n + 1)]
        for i in range(n + 1)
    ]
    for j in range(1, n + 1):
        m[0][j] = f[j - 1]
    return m


def build_P(plane: Hyperplane) -> list[list[Fraction]]:
    """n x (n+1) matrix [I_n | alpha-column]; the row map x~ -> (1, f^(x))."""
    n = plane.n
    rows = []
    for i in range(n):
        row = [Fraction(1) if j == i else Fraction(0) for j in range(n)]
        row.append(plane.alpha[i])
        rows.append(row)
    return rows


def x_tilde_P(plane: Hyperplane, x: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Row vector x~ P = (1, f^_1(x), ..., f^_n(x))."""
    return (Fraction(1),) + _f_hat(plane, x)


def _point_map_pieces(plane: Hyperplane, n: int, dim: int, projected: bool):
    """Constant columns of the point map plus affine e_0-row entries.

    The point map is C + e_0 (x) r(x) with C constant and r affine in x,
    which keeps orbit components affine: any wedge with two e_0 factors
    vanishes.
    """
    d = n - 1
    zero = AffineForm(Fraction(0), (Fraction(0),) * d)
    columns: list[Multivector] = []
    rows: list[AffineForm] = []
    for pos in range(dim):
        comps = {1 << pos: Fraction(1)}
        form = zero
        if projected:
            if 1 <= pos <= n - 1:  # e_i column, i = pos
                grad = tuple(Fraction(1) if k == pos - 1 else Fraction(0) for k in range(d))
                form = AffineForm(Fraction(0), grad)
            elif pos == n:  # e_n column
                form = AffineForm(plane.alpha[0], tuple(plane.alpha[1:]))
        else:
            if n <= pos <= 2 * n - 2:  # e_i column, i = pos - (n-1)
                i = pos - (n - 1)
                comps[1 << i] = Fraction(1)  # starred contribution
                grad = tuple(Fraction(1) if k == i - 1 else Fraction(0) for k in range(d))
                form = AffineForm(Fraction(0), grad)
            elif pos == 2 * n - 1:  # e_n column
                for i in range(1, n):
                    comps[1 << i] = plane.alpha[i]
                form = AffineForm(plane.alpha[0], tuple(plane.alpha[1:]))
        columns.append(Multivector(dim, 1, comps))
        rows.append(form)
    return columns, rows


def flow_orbit(
    w: Multivector,
    plane: Hyperplane,
    params: FlowParams,
    projected: bool = False,
) -> AffineMultivector:
    """Exact orbit D u_x w as a multivector of affine forms in x.

    With ``projected`` the input lives on n+1 coordinates and the hatted
    maps apply instead.
    """
    n = plane.n
    dim = (n + 1) if projected else 2 * n
    if w.dim != dim:
        raise ConfigError(f"multivector dimension {w.dim} != expected {dim}")
    d = n - 1
    diag = build_D_hat(params, n) if projected else build_D(params, n)
    columns, rows = _point_map_pieces(plane, n, dim, projected)
    e0 = Multivector.basis(dim, [0])

    accum: dict[int, AffineForm] = {}

    def add_term(mv: Multivector, form: AffineForm) -> None:
        for mask, coeff in mv.comps.items():
            scaled = form.scale(coeff)
            if mask in accum:
                accum[mask] = accum[mask] + scaled
            else:
                accum[mask] = scaled

    one = AffineForm(Fraction(1), (Fraction(0),) * d)
    for idx, coeff in w.terms():
        base = Multivector(dim, 0, {0: coeff})
        const_part = base
        for pos in idx:
            const_part = const_part.wedge(columns[pos])
        add_term(const_part, one)
        # One e_0 substitution per slot captures the affine dependence.
        for slot, pos in enumerate(idx):
            if rows[pos].is_constant() and rows[pos].const == 0:
                continue
            piece = base
            for k, other in enumerate(idx):
                piece = piece.wedge(e0 if k == slot else columns[other])
            if not piece.is_zero():
                add_term(piece, rows[pos])

    comps: dict[int, AffineForm] = {}
    for mask, form in accum.items():
        scale = Fraction(1)
        rest = mask
        while rest:
            low = rest & -rest
            scale *= diag[low.bit_length() - 1]
            rest ^= low
        comps[mask] = form.scale(scale)
    return AffineMultivector(dim, w.grade, d, comps)


def lambda_embed_vector(v: Sequence[Fraction], n: int) -> Multivector:
    """(p, q_1..q_n) -> p e_0 + sum q_i e_i inside the ambient 2n-space."""
    if len(v) != n + 1:
        raise ConfigError("vector length must be n+1")
    comps: dict[int, Fraction] = {}
    p = as_scalar(v[0])
    if p:
        comps[1] = p
    for i in range(1, n + 1):
        qi = as_scalar(v[i])
        if qi:
            comps[1 << ((n - 1) + i)] = qi
    return Multivector(2 * n, 1, comps)


def lambda_embed_multivector(w: Multivector, n: int) -> Multivector:
    """Push a multivector on n+1 coordinates through the position map
    0 -> 0, i -> (n-1)+i.  The map is strictly increasing, so Pluecker
    coordinates carry over without sign changes."""
    if w.dim != n + 1:
        raise ConfigError("multivector dimension must be n+1")
    comps: dict[int, Fraction] = {}
    for idx, coeff in w.terms():
        positions = [0 if i == 0 else (n - 1) + i for i in idx]
        comps[mask_of(positions, 2 * n)] = coeff
    return Multivector(2 * n, w.grade, comps)


def project_star_free(w: Multivector, n: int) -> Multivector:
    """Keep components avoiding every starred direction, relabeled to the
    projected n+1 coordinates."""
    if w.dim != 2 * n:
        raise ConfigError("multivector dimension must be 2n")
    comps: dict[int, Fraction] = {}
    for idx, coeff in w.terms():
        if any(1 <= pos <= n - 1 for pos in idx):
            continue
        back = [0 if pos == 0 else pos - (n - 1) for pos in idx]
        comps[mask_of(back, n + 1)] = coeff
    return Multivector(n + 1, w.grade, comps)
