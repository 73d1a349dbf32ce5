"""Compare the compiled scan kernel against the numpy fallback.

Each backend runs in its own subprocess because the choice is frozen at
first import (KHINLAB_BACKEND).  The workload is the shell-membership
estimator on the standard badly-approximable plane; both backends must
agree hit-for-hit, so the estimates are asserted identical before the
timing table prints.

Usage: python3 benchmarks/bench_scan.py [--samples N] [--t 6,8,10]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from khinlab.affine import Box
from khinlab.diophantine import ApproxRate
from khinlab.flows import Hyperplane
from khinlab.kernels import backend_name
from khinlab.measure import GEQ, MCSampler, estimate_region_measure

samples, t_values = json.loads(sys.argv[1])
plane = Hyperplane.from_spec("sqrt2m1,sqrt3m1@1e-40")
box = Box.from_bounds([(0, 1)])
rows = []
for t in t_values:
    sampler = MCSampler(samples, 1234)
    start = time.monotonic()
    report = estimate_region_measure(
        box, plane, t, ApproxRate.psi0(2), GEQ, sampler
    )
    rows.append(
        {
            "t": t,
            "seconds": time.monotonic() - start,
            "estimate": str(report.estimate),
        }
    )
print(json.dumps({"backend": backend_name(), "rows": rows}))
"""


def run_backend(name: str, samples: int, t_values: list[int]) -> dict:
    env = dict(os.environ, KHINLAB_BACKEND=name)
    proc = subprocess.run(
        [sys.executable, "-c", CHILD, json.dumps([samples, t_values])],
        capture_output=True,
        text=True,
        env=env,
    )
    if proc.returncode != 0:
        raise SystemExit(f"{name} backend failed:\n{proc.stderr}")
    return json.loads(proc.stdout)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--t", default="6,8,10")
    args = parser.parse_args()
    t_values = [int(p) for p in args.t.split(",")]

    results = {}
    for name in ("compiled", "numpy"):
        try:
            results[name] = run_backend(name, args.samples, t_values)
        except SystemExit as exc:
            if name == "compiled":
                print(f"note: {exc}", file=sys.stderr)
                continue
            raise
    if "compiled" in results:
        for a, b in zip(results["compiled"]["rows"], results["numpy"]["rows"]):
            if a["estimate"] != b["estimate"]:
                raise SystemExit(
                    f"backend mismatch at t={a['t']}: "
                    f"{a['estimate']} vs {b['estimate']}"
                )

    print(f"samples per shell: {args.samples}")
    header = f"{'t':>4} {'numpy (s)':>12} {'compiled (s)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for i, t in enumerate(t_values):
        numpy_s = results["numpy"]["rows"][i]["seconds"]
        if "compiled" in results:
            comp_s = results["compiled"]["rows"][i]["seconds"]
            ratio = f"{numpy_s / comp_s:8.2f}x" if comp_s > 0 else "n/a"
            print(f"{t:>4} {numpy_s:>12.3f} {comp_s:>14.3f} {ratio:>9}")
        else:
            print(f"{t:>4} {numpy_s:>12.3f} {'absent':>14} {'n/a':>9}")
    if "compiled" in results:
        print("estimates agree hit-for-hit across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
