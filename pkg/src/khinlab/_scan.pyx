# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernel.

Walks precomputed integer q-runs for every sample point, stepping the
fractional value v = frac(q1*x + q2*g) by v += x per unit q1 step (the
wrap v -= 1 is exact for v in [1,2)).  Decisions are made with a safety
margin: values clearly inside the hit zone set the hit flag, values
within `margin` of a threshold are recorded as border triples for exact
rational recheck by the caller.  Total float error per run stays well
below the margin for |q| <= 2^12 and run length <= 2^13.
"""

from libc.math cimport fmod


def scan_hits(double[::1] xs, double[::1] gs,
              long long[::1] q2_vals,
              long long[::1] run_ptr,
              long long[::1] run_start,
              long long[::1] run_len,
              double theta, double margin, long long max_steps,
              unsigned char[::1] hits,
              long long[::1] border_buf):
    """Fill `hits` per sample; return (border_count, steps, overflow).

    border_buf receives flat (sample_index, q2_index, q1) triples.
    overflow: 0 ok, 1 step budget exceeded, 2 border buffer full.
    """
    cdef Py_ssize_t n_samples = xs.shape[0]
    cdef Py_ssize_t m = q2_vals.shape[0]
    cdef Py_ssize_t i, j, r, k
    cdef long long s, L, steps = 0, bcount = 0, q2
    cdef long long border_cap = border_buf.shape[0] // 3
    cdef double x, g, t1, t2, v
    cdef double theta_lo = theta - margin
    cdef double theta_hi = theta + margin
    cdef double upper_lo = 1.0 - theta - margin
    cdef double upper_hi = 1.0 - theta + margin
    cdef int hit, overflow = 0
    with nogil:
        for i in range(n_samples):
            x = xs[i]
            g = gs[i]
            hit = 0
            for j in range(m):
                q2 = q2_vals[j]
                t2 = fmod(q2 * g, 1.0)
                if t2 < 0.0:
                    t2 += 1.0
                for r in range(run_ptr[j], run_ptr[j + 1]):
                    s = run_start[r]
                    L = run_len[r]
                    steps += L
                    if steps > max_steps:
                        overflow = 1
                        break
                    t1 = fmod(s * x, 1.0)
                    if t1 < 0.0:
                        t1 += 1.0
                    v = t1 + t2
                    if v >= 1.0:
                        v -= 1.0
                    for k in range(L):
                        if v < theta_lo or v > upper_hi:
                            hit = 1
                            break
                        if v < theta_hi or v > upper_lo:
                            if bcount >= border_cap:
                                overflow = 2
                                break
                            border_buf[bcount * 3] = i
                            border_buf[bcount * 3 + 1] = j
                            border_buf[bcount * 3 + 2] = s + k
                            bcount += 1
                        v += x
                        if v >= 1.0:
                            v -= 1.0
                    if hit or overflow:
                        break
                if hit or overflow:
                    break
            hits[i] = hit
            if overflow:
                break
    return bcount, steps, overflow
