"""Command-line front end: verification scans and diagnostics with
reproducible CSV/JSON artifacts.

Every run writes ``manifest.json`` (the resolved configuration plus its
hash) next to ``<command>.json`` and, for tabular commands,
``<command>.csv``.  Outputs are byte-identical for identical
configuration and seed whatever the worker count: workers change
scheduling, never content, so the worker flag and the output directory
stay out of the manifest.

Exit statuses: 0 clean, 1 verification violation, 2 configuration
error, 3 precision guard, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import random
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import diophantine, measure, nondiv
from .affine import Box, parse_form
from .diophantine import ApproxRate, parse_rate
from .errors import ConfigError, KhinlabError
from .exactnum import as_scalar, good_constant
from .flows import Hyperplane
from .measure import parse_sampler
from .powcmp import PowProd, pow2

WORKERS_ENV = "KHINLAB_WORKERS"


# ---------------------------------------------------------------------------
# parsing helpers (flags and config-file values share one string grammar)


def _int(text: str, flag: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{flag} needs an integer, got {text!r}") from None


def _scalar(text: str, flag: str) -> Fraction:
    try:
        return as_scalar(text)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ConfigError(f"{flag} needs a rational, got {text!r}") from None


def parse_box(text: str) -> Box:
    """``lo,hi`` per axis, axes separated by ``;``."""
    bounds = []
    for axis in text.split(";"):
        parts = [p.strip() for p in axis.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"box axis needs lo,hi, got {axis!r}")
        bounds.append((as_scalar(parts[0]), as_scalar(parts[1])))
    return Box.from_bounds(bounds)


def parse_trange(text: str) -> tuple[int, ...]:
    """``2..10``, a single value, or a comma list."""
    text = text.strip()
    if ".." in text:
        lo_text, _, hi_text = text.partition("..")
        lo, hi = _int(lo_text, "--t"), _int(hi_text, "--t")
        if hi < lo:
            raise ConfigError(f"empty t range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(_int(p.strip(), "--t") for p in text.split(","))


def parse_psi(text: str) -> ApproxRate:
    """``pow:a=2,b=2`` key=value form, or the ``psi0:n`` / ``c,a[,b]``
    forms understood by the library parser."""
    text = text.strip()
    if not text.startswith("pow:"):
        return parse_rate(text)
    params = {"c": Fraction(1), "a": None, "b": Fraction(0)}
    for pair in text[4:].split(","):
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or key not in params:
            raise ConfigError(f"bad psi parameter {pair!r}")
        params[key] = _scalar(value.strip(), "--psi")
    if params["a"] is None:
        raise ConfigError("pow: psi needs a= decay exponent")
    return ApproxRate.power(params["c"], params["a"], params["b"])


def _parse_int_vector(text: str, flag: str) -> tuple[int, ...]:
    return tuple(_int(p.strip(), flag) for p in text.split(","))


def _parse_scalars(text: str, flag: str) -> tuple[Fraction, ...]:
    return tuple(_scalar(p.strip(), flag) for p in text.split(","))


def _load_config(path: str) -> dict[str, str]:
    """Flat key=value document; blank lines and # comments skipped."""
    pairs: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        pairs[key.strip().replace("-", "_")] = value.strip()
    return pairs


def _need(ns: argparse.Namespace, dest: str) -> str:
    value = getattr(ns, dest)
    if value is None:
        raise ConfigError(f"missing --{dest.replace('_', '-')}")
    return value


def _check_n(ns: argparse.Namespace, plane: Hyperplane) -> None:
    if ns.n is not None and _int(ns.n, "--n") != plane.n:
        raise ConfigError("--n disagrees with the alpha vector length")


def _resolve_workers(ns: argparse.Namespace) -> int | None:
    if ns.workers is not None:
        return _int(ns.workers, "--workers")
    env = os.environ.get(WORKERS_ENV)
    return _int(env, WORKERS_ENV) if env else None


# ---------------------------------------------------------------------------
# deterministic serialization


def _plain(value):
    """Canonical JSON-ready rendering: exact rationals as strings,
    floats kept as floats, infinities as signed-string sentinels."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isinf(value):
            return "+inf" if value > 0 else "-inf"
        return value
    if isinstance(value, PowProd):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return str(value)


def canonical_json(payload: dict) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence], note: str) -> str:
    buf = io.StringIO()
    buf.write(note + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(value) -> str:
    rendered = _plain(value)
    if isinstance(rendered, bool):
        return "true" if rendered else "false"
    if rendered is None:
        return ""
    if isinstance(rendered, float):
        return repr(rendered)
    return str(rendered)


class RunOutput:
    """Collects one command's artifacts, then writes them atomically
    enough for our purposes (manifest last would leave torn runs; the
    manifest is tiny so it goes first)."""

    def __init__(self, command: str, resolved: dict[str, str]):
        self.command = command
        self.resolved = dict(sorted(resolved.items()))
        core = canonical_json({"command": command, "config": self.resolved})
        self.manifest_hash = hashlib.sha256(core.encode()).hexdigest()
        self.payload: dict = {}
        self.tables: list[tuple[str, Sequence[str], Sequence[Sequence]]] = []

    def add_table(self, header, rows, name: str | None = None) -> None:
        self.tables.append((name or self.command, header, rows))

    def write(self, out_dir: str) -> list[str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "config": self.resolved,
            "manifest_hash": self.manifest_hash,
        }
        written = []
        path = out / "manifest.json"
        path.write_text(canonical_json(manifest))
        written.append(str(path))
        body = dict(self.payload)
        body["manifest_hash"] = self.manifest_hash
        path = out / f"{self.command}.json"
        path.write_text(canonical_json(body))
        written.append(str(path))
        note = f"# manifest {self.manifest_hash}"
        for name, header, rows in self.tables:
            path = out / f"{name}.csv"
            path.write_text(_csv_text(header, rows, note))
            written.append(str(path))
        return written


# ---------------------------------------------------------------------------
# command handlers; each returns (RunOutput, exit_status)


def _cmd_series(ns) -> tuple[RunOutput, int]:
    n = _int(_need(ns, "n"), "--n")
    psi_text = _need(ns, "psi")
    terms = _int(ns.terms or "10000", "--terms")
    report = diophantine.series_converges(parse_psi(psi_text), n, terms=terms)
    run = RunOutput(
        "series", {"n": str(n), "psi": psi_text, "terms": str(terms)}
    )
    run.payload = {
        "verdict": report.verdict,
        "n": report.n,
        "terms": report.terms,
        "partial_sum": report.partial_sum,
        "tail_bound": report.tail_bound_float,
    }
    print(f"verdict {report.verdict}")
    return run, 0


def _cmd_exponent(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    q_max = _int(_need(ns, "Q"), "--Q")
    plane = Hyperplane.from_spec(alpha_text)
    report = diophantine.dioph_exponent_estimate(plane.alpha, q_max, keep_all=False)
    run = RunOutput("exponent", {"alpha": alpha_text, "Q": str(q_max)})
    run.payload = {
        "omega_hat": report.omega_hat,
        "q_max": report.q_max,
        "min_best": report.min_best,
        "argmin_q": report.argmin_q,
        "sentinel_q": report.sentinel_q,
    }
    run.add_table(
        ["q", "best_value_num", "best_value_den", "local_exponent"],
        [
            (r.q, r.best_value.numerator, r.best_value.denominator, r.local_exponent)
            for r in report.records
        ],
    )
    shown = "+inf" if math.isinf(report.omega_hat) else f"{report.omega_hat:.4f}"
    print(f"omega_hat {shown}")
    return run, 0


def _cmd_delta_margin(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    q_max = _int(ns.Q or "10000", "--Q")
    plane = Hyperplane.from_spec(alpha_text)
    kwargs = {}
    if ns.max_exceptions is not None:
        kwargs["max_exceptions"] = _int(ns.max_exceptions, "--max-exceptions")
    report = diophantine.delta_margin(plane.alpha, q_max, **kwargs)
    resolved = {"alpha": alpha_text, "Q": str(q_max)}
    if ns.max_exceptions is not None:
        resolved["max_exceptions"] = ns.max_exceptions
    run = RunOutput("delta-margin", resolved)
    run.payload = {
        "delta": report.delta,
        "exceptional_qs": list(report.exceptional_qs),
        "condition2_holds": report.condition2_holds,
        "q_max": report.q_max,
        "n": report.n,
    }
    print(f"delta {report.delta}")
    return run, 0


def _cmd_scan_measure(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    box_text = _need(ns, "box")
    sampler_text = _need(ns, "sampler")
    plane = Hyperplane.from_spec(alpha_text)
    _check_n(ns, plane)
    psi_text = ns.psi or f"psi0:{plane.n}"
    t_range = parse_trange(_need(ns, "t"))
    rows = measure.theorem31_report(
        parse_box(box_text),
        plane,
        parse_psi(psi_text),
        t_range,
        parse_sampler(sampler_text),
        workers=_resolve_workers(ns),
    )
    run = RunOutput(
        "scan-measure",
        {
            "alpha": alpha_text,
            "box": box_text,
            "psi": psi_text,
            "t": _need(ns, "t"),
            "sampler": sampler_text,
        },
    )
    violations = [r.t for r in rows if not r.ok]
    run.payload = {
        "rows": [asdict(r) for r in rows],
        "violations": violations,
    }
    table = [
        (
            r.t,
            "geq",
            float(r.estimate),
            r.ci[0] if r.ci else None,
            r.ci[1] if r.ci else None,
            float(r.bound),
            float(r.margin),
        )
        for r in rows
    ]
    run.add_table(
        ["t", "side", "estimate", "ci_lo", "ci_hi", "bound", "margin"], table
    )
    print(f"rows {len(rows)} violations {len(violations)}")
    return run, 1 if violations else 0


def _cmd_strip(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    box_text = _need(ns, "box")
    q_text = _need(ns, "q")
    theta_text = _need(ns, "theta")
    plane = Hyperplane.from_spec(alpha_text)
    _check_n(ns, plane)
    box = parse_box(box_text)
    q = _parse_int_vector(q_text, "--q")
    theta = _scalar(theta_text, "--theta")
    report = measure.strip_measure_exact(box, q, plane, theta)
    ok, lhs, rhs_lo = measure.strip_bound_check(box, q, plane, theta)
    run = RunOutput(
        "strip",
        {
            "alpha": alpha_text,
            "box": box_text,
            "q": q_text,
            "theta": theta_text,
        },
    )
    run.payload = {
        "measure": report.measure,
        "s_sq": report.s_sq,
        "s_float": report.s_float,
        "strip_count": report.strip_count,
        "bound_ok": ok,
        "bound_lhs": lhs,
        "bound_rhs_lower": rhs_lo,
    }
    print(str(report.measure))
    return run, 0 if ok else 1


def _cmd_nondiv_scan(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    box_text = _need(ns, "box")
    eps_text = _need(ns, "eps")
    t_text = _need(ns, "t")
    height = _int(_need(ns, "height"), "--height")
    q_max = _int(ns.Q or "10000", "--Q")
    plane = Hyperplane.from_spec(alpha_text)
    _check_n(ns, plane)
    box = parse_box(box_text)
    t_range = parse_trange(t_text)
    resolved = {
        "alpha": alpha_text,
        "box": box_text,
        "eps": eps_text,
        "t": t_text,
        "height": str(height),
        "Q": str(q_max),
    }
    if ns.ranks is not None:
        resolved["ranks"] = ns.ranks
    run = RunOutput("nondiv-scan", resolved)
    margin = diophantine.delta_margin(plane.alpha, q_max)
    run.payload = {
        "delta": margin.delta,
        "exceptional_qs": list(margin.exceptional_qs),
        "condition2_holds": margin.condition2_holds,
    }
    if not margin.condition2_holds:
        run.payload["findings"] = [
            {
                "kind": "exceptional-set-overflow",
                "detail": "the growth condition fails on this coefficient "
                "vector, so no positive margin exists",
                "exceptional_qs": list(margin.exceptional_qs),
            }
        ]
        print("condition (2) fails: no usable delta margin")
        return run, 1
    consts = nondiv.make_constants(box, plane.n, margin.delta)
    ranks = (
        _parse_int_vector(ns.ranks, "--ranks") if ns.ranks is not None else None
    )
    report = nondiv.nondiv_scan(
        plane,
        box,
        _scalar(eps_text, "--eps"),
        t_range,
        height,
        consts,
        frozenset(margin.exceptional_qs),
        ranks=ranks,
        workers=_resolve_workers(ns),
    )
    per_t: dict[int, int] = {t: 0 for t in t_range}
    table = []
    for record in report.records:
        per_t[record.t] += 1
        table.append(
            (
                record.rank,
                record.case,
                record.w.serialize(),
                record.sup.numerator,
                record.sup.denominator,
                record.bound_lower.numerator,
                record.bound_lower.denominator,
                record.margin,
                record.exceptional,
            )
        )
    run.payload.update(
        {
            "checked": report.checked,
            "violations": [
                {"t": r.t, "rank": r.rank, "w": r.w.serialize()}
                for r in report.violations
            ],
            "exceptional_failures": report.exceptional_failures,
            "t_values": list(t_range),
            "rows_per_t": {str(t): per_t[t] for t in t_range},
        }
    )
    run.add_table(
        [
            "rank",
            "case",
            "w_serialized",
            "sup_num",
            "sup_den",
            "bound_num",
            "bound_den",
            "margin",
            "exceptional",
        ],
        table,
    )
    print(f"checked {report.checked} violations {len(report.violations)}")
    return run, 1 if report.violations else 0


def _cmd_bkm_check(ns) -> tuple[RunOutput, int]:
    alpha_text = _need(ns, "alpha")
    box_text = _need(ns, "box")
    beta_text = _need(ns, "beta")
    t_text = _need(ns, "t")
    height = _int(_need(ns, "height"), "--height")
    sampler_text = _need(ns, "sampler")
    q_max = _int(ns.Q or "10000", "--Q")
    n_d = _int(ns.n_d or "1", "--n-d")
    plane = Hyperplane.from_spec(alpha_text)
    _check_n(ns, plane)
    box = parse_box(box_text)
    beta = _scalar(beta_text, "--beta")
    margin = diophantine.delta_margin(plane.alpha, q_max)
    if not margin.condition2_holds:
        raise ConfigError("no delta margin for this alpha; bound undefined")
    consts = nondiv.make_constants(box, plane.n, margin.delta, n_d=n_d)
    threshold = nondiv.beta_threshold(plane.n, margin.delta)
    if beta >= threshold:
        raise ConfigError(
            f"beta {beta} is not below the closing threshold {threshold}"
        )
    resolved = {
        "alpha": alpha_text,
        "box": box_text,
        "beta": beta_text,
        "t": t_text,
        "height": str(height),
        "sampler": sampler_text,
        "Q": str(q_max),
        "n_d": str(n_d),
    }
    run = RunOutput("bkm-check", resolved)
    workers = _resolve_workers(ns)
    rows = []
    failed = False
    for t in parse_trange(t_text):
        record = nondiv.bkm_empirical_check(
            plane,
            box,
            t,
            pow2(-beta * t),
            height,
            parse_sampler(sampler_text),
            consts,
            workers=workers,
        )
        rows.append(
            {
                "t": record.t,
                "fraction": record.fraction,
                "bound": record.bound_float,
                "precondition_ok": record.precondition_ok,
                "required_height": record.required_height,
                "widened": record.widened,
                "ok": record.ok,
            }
        )
        if record.ok is False:
            failed = True
    checked = sum(1 for row in rows if row["ok"] is not None)
    run.payload = {
        "delta": margin.delta,
        "beta": beta,
        "threshold": threshold,
        "rows": rows,
        "theorem_backed_rows": checked,
    }
    print(f"rows {len(rows)} theorem-backed {checked} failed {failed}")
    return run, 1 if failed else 0


def _cmd_cvec(ns) -> tuple[RunOutput, int]:
    n = _int(_need(ns, "n"), "--n")
    j = _int(_need(ns, "j"), "--j")
    height = _int(_need(ns, "height"), "--height")
    trials = _int(ns.trials or "20", "--trials")
    seed = _int(ns.seed or "0", "--seed")
    rng = random.Random(seed)
    alphas = []
    for _ in range(trials):
        entries = []
        for _ in range(n):
            den = rng.randint(1, 50)
            entries.append(Fraction(rng.randint(-10 * den + 1, 10 * den - 1), den))
        alphas.append(tuple(entries))
    report = nondiv.verify_cvec_lemma(n, j, height, alphas)
    run = RunOutput(
        "cvec",
        {
            "n": str(n),
            "j": str(j),
            "height": str(height),
            "trials": str(trials),
            "seed": str(seed),
        },
    )
    run.payload = {
        "min_value": report.min_value,
        "w_checked": report.w_checked,
        "alphas_checked": report.alphas_checked,
        "witness_w": report.witness_w.serialize(),
        "witness_I": list(report.witness_I),
        "violations": [
            {"w": w.serialize(), "alpha": list(alpha), "value": value}
            for w, alpha, value in report.violations
        ],
    }
    ok = not report.violations and report.min_value >= 1
    print(f"min {report.min_value} violations {len(report.violations)}")
    return run, 0 if ok else 1


def _cmd_good(ns) -> tuple[RunOutput, int]:
    forms_text = _need(ns, "form")
    box_text = _need(ns, "box")
    box = parse_box(box_text)
    forms = [parse_form(p) for p in forms_text.split(";")]
    exponent = _int(ns.exp or "1", "--exp")
    eps_text = ns.eps or "1/2,1/4,1/8,1/16"
    eps_grid = _parse_scalars(eps_text, "--eps")
    if ns.C is not None:
        constant = _scalar(ns.C, "--C")
    else:
        constant = good_constant(box.dim).hi
    sampler = parse_sampler(ns.sampler) if ns.sampler is not None else None
    target = forms[0] if len(forms) == 1 else forms
    report = nondiv.good_check(target, box, constant, exponent, eps_grid, sampler)
    resolved = {
        "form": forms_text,
        "box": box_text,
        "C": str(constant),
        "exp": str(exponent),
        "eps": eps_text,
    }
    if ns.sampler is not None:
        resolved["sampler"] = ns.sampler
    run = RunOutput("good", resolved)
    run.payload = {
        "rows": [asdict(r) for r in report.rows],
        "worst_ratio": report.worst_ratio,
        "c_min": report.c_min,
        "c_required": report.c_required,
        "passed": report.passed,
        "vacuous": report.vacuous,
    }
    print(f"passed {report.passed} worst_ratio {float(report.worst_ratio):.6g}")
    return run, 0 if report.passed else 1


def _cmd_dim_bound(ns) -> tuple[RunOutput, int]:
    n = _int(_need(ns, "n"), "--n")
    m = _int(_need(ns, "m"), "--m")
    psi_text = _need(ns, "psi")
    value = diophantine.dd_dim_bound(parse_psi(psi_text), n, m)
    run = RunOutput(
        "dim-bound", {"n": str(n), "m": str(m), "psi": psi_text}
    )
    run.payload = {"dim_bound": value}
    print(str(value))
    return run, 0


def _cmd_tail(ns) -> tuple[RunOutput, int]:
    n = _int(_need(ns, "n"), "--n")
    delta = _scalar(_need(ns, "delta"), "--delta")
    beta = _scalar(_need(ns, "beta"), "--beta")
    big_t = _int(_need(ns, "T"), "--T")
    t_start = _int(ns.t_start or "1", "--t-start")
    resolved = {
        "n": str(n),
        "delta": _need(ns, "delta"),
        "beta": _need(ns, "beta"),
        "T": str(big_t),
        "t_start": str(t_start),
    }
    if ns.box is not None:
        consts = nondiv.make_constants(parse_box(ns.box), n, delta)
        resolved["box"] = ns.box
    else:
        c_b = _scalar(ns.c_b or "1", "--c-b")
        consts = nondiv.NondivConstants(n, delta, c_b, Fraction(1, n + 1))
        resolved["c_b"] = ns.c_b or "1"
    report = nondiv.closing_series(consts, beta, big_t, t_start=t_start)
    run = RunOutput("tail", resolved)
    run.payload = {
        "beta": report.beta,
        "threshold": report.threshold,
        "t_start": report.t_start,
        "t_certified": report.t_certified,
        "rates": list(report.rates),
        "dominant": report.dominant,
        "partial_sum": report.partial_sum,
        "tail": report.tail,
        "ratio_log2": report.ratio_log2,
    }
    print(f"tail {report.tail!r}")
    return run, 0


_HANDLERS = {
    "series": _cmd_series,
    "exponent": _cmd_exponent,
    "delta-margin": _cmd_delta_margin,
    "scan-measure": _cmd_scan_measure,
    "strip": _cmd_strip,
    "nondiv-scan": _cmd_nondiv_scan,
    "bkm-check": _cmd_bkm_check,
    "cvec": _cmd_cvec,
    "good": _cmd_good,
    "dim-bound": _cmd_dim_bound,
    "tail": _cmd_tail,
}


def _build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument(
        "--workers", help=f"parallel workers (default: ${WORKERS_ENV} or serial)"
    )
    parser = argparse.ArgumentParser(
        prog="khinlab",
        description="exact-arithmetic verification scans for shrinking-"
        "target problems on hyperplanes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs: dict[str, list[str]] = {
        "series": ["n", "psi", "terms"],
        "exponent": ["alpha", "Q"],
        "delta-margin": ["alpha", "Q", "max-exceptions"],
        "scan-measure": ["n", "alpha", "box", "psi", "t", "sampler"],
        "strip": ["n", "alpha", "box", "q", "theta"],
        "nondiv-scan": ["n", "alpha", "box", "eps", "t", "height", "Q", "ranks"],
        "bkm-check": [
            "n",
            "alpha",
            "box",
            "beta",
            "t",
            "height",
            "sampler",
            "Q",
            "n-d",
        ],
        "cvec": ["n", "j", "height", "trials", "seed"],
        "good": ["form", "box", "C", "exp", "eps", "sampler"],
        "dim-bound": ["n", "m", "psi"],
        "tail": ["n", "delta", "beta", "T", "t-start", "box", "c-b"],
    }
    subparsers = {}
    for name, flags in specs.items():
        sp = sub.add_parser(name, parents=[common])
        for flag in flags:
            sp.add_argument(f"--{flag}", default=None)
        subparsers[name] = sp
    return parser, subparsers


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.config:
            pairs = _load_config(ns.config)
            sp = subparsers[ns.command]
            known = {a.dest for a in sp._actions}
            unknown = sorted(set(pairs) - known)
            if unknown:
                raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
            sp.set_defaults(**pairs)
            ns = parser.parse_args(argv)
        run, status = _HANDLERS[ns.command](ns)
        run.write(ns.out)
        return status
    except KhinlabError as exc:
        print(f"khinlab: {exc}", file=sys.stderr)
        return exc.exit_status
    except SystemExit as exc:
        code = exc.code
        if code in (0, None):
            return 0
        return 2 if not isinstance(code, int) else code
