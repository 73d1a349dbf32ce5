"""Pure-numpy mirror of the compiled scan kernel.

Same contract as _scan.scan_hits: identical hit decisions are guaranteed
not by matching float operations bit for bit but by the shared margin
protocol — each backend keeps its float error far below `margin`, and
every value within the margin band of a threshold is handed back for
exact recheck.  The step budget is charged per run times live samples,
so this backend refuses very large shells earlier than the compiled one.
"""

from __future__ import annotations

import numpy as np


def scan_hits(xs, gs, q2_vals, run_ptr, run_start, run_len,
              theta, margin, max_steps, hits, border_buf):
    xs = np.asarray(xs)
    gs = np.asarray(gs)
    n = xs.shape[0]
    m = q2_vals.shape[0]
    border_cap = border_buf.shape[0] // 3
    theta_lo = theta - margin
    theta_hi = theta + margin
    upper_lo = 1.0 - theta - margin
    upper_hi = 1.0 - theta + margin
    steps = 0
    triples: list[tuple[int, int, int]] = []
    overflow = 0
    alive = np.ones(n, dtype=bool)
    for j in range(m):
        if overflow or not alive.any():
            break
        q2 = int(q2_vals[j])
        for r in range(int(run_ptr[j]), int(run_ptr[j + 1])):
            act = np.nonzero(alive)[0]
            if act.size == 0 or overflow:
                break
            s = int(run_start[r])
            length = int(run_len[r])
            steps += length * act.size
            if steps > max_steps:
                overflow = 1
                break
            x = xs[act]
            t2 = np.fmod(q2 * gs[act], 1.0)
            t2[t2 < 0.0] += 1.0
            v = np.fmod(s * x, 1.0)
            v[v < 0.0] += 1.0
            v = v + t2
            v[v >= 1.0] -= 1.0
            for k in range(length):
                sure = (v < theta_lo) | (v > upper_hi)
                if sure.any():
                    hits[act[sure]] = 1
                    alive[act[sure]] = False
                    keep = ~sure
                    act = act[keep]
                    v = v[keep]
                    x = x[keep]
                    if act.size == 0:
                        break
                band = (v < theta_hi) | (v > upper_lo)
                if band.any():
                    for idx in np.nonzero(band)[0]:
                        if len(triples) >= border_cap:
                            overflow = 2
                            break
                        triples.append((int(act[idx]), j, s + k))
                    if overflow:
                        break
                v = v + x
                v[v >= 1.0] -= 1.0
    flat = border_buf
    for b, (i, j, q1) in enumerate(triples):
        flat[b * 3] = i
        flat[b * 3 + 1] = j
        flat[b * 3 + 2] = q1
    return len(triples), steps, overflow
