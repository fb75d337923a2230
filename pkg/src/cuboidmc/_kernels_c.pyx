# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
"""Compiled scan kernels: candidate-split scoring and full-search matching.

Must stay bit-compatible with _kernels_py: identical float64 operation
order for split scores, exact int64 motion costs, identical tie-breaks.
"""

import numpy as np

cimport numpy as cnp

BACKEND = "compiled"


cdef inline double _rect_sse(const cnp.int64_t[:, ::1] sums,
                             const cnp.int64_t[:, ::1] sqs,
                             Py_ssize_t x0, Py_ssize_t y0,
                             Py_ssize_t x1, Py_ssize_t y1) noexcept nogil:
    cdef cnp.int64_t a = <cnp.int64_t>(x1 - x0) * <cnp.int64_t>(y1 - y0)
    if a <= 0:
        return 0.0
    cdef cnp.int64_t s = sums[y1, x1] - sums[y0, x1] - sums[y1, x0] + sums[y0, x0]
    cdef cnp.int64_t q = sqs[y1, x1] - sqs[y0, x1] - sqs[y1, x0] + sqs[y0, x0]
    return <double>q - (<double>s * <double>s) / <double>a


def split_scores(const cnp.int64_t[:, ::1] sums, const cnp.int64_t[:, ::1] sqs,
                 Py_ssize_t x, Py_ssize_t y, Py_ssize_t w, Py_ssize_t h,
                 Py_ssize_t scale):
    """Score every candidate split of region (x, y, w, h) in one channel.

    Returns float64[w + h - 2]: vertical offsets 1..w-1 first, then
    horizontal offsets 1..h-1; each entry is left-child SSE + right-child
    SSE in the channel's plane (coordinates divided by `scale` for
    subsampled planes).
    """
    out = np.empty(w + h - 2, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t cx0 = x // scale
    cdef Py_ssize_t cy0 = y // scale
    cdef Py_ssize_t cx1 = (x + w) // scale
    cdef Py_ssize_t cy1 = (y + h) // scale
    cdef Py_ssize_t i, cs
    with nogil:
        for i in range(1, w):
            cs = (x + i) // scale
            o[i - 1] = _rect_sse(sums, sqs, cx0, cy0, cs, cy1) + \
                _rect_sse(sums, sqs, cs, cy0, cx1, cy1)
        for i in range(1, h):
            cs = (y + i) // scale
            o[w - 2 + i] = _rect_sse(sums, sqs, cx0, cy0, cx1, cs) + \
                _rect_sse(sums, sqs, cx0, cs, cx1, cy1)
    return out


def motion_search(const cnp.int32_t[:, ::1] cur, const cnp.int32_t[:, ::1] refp,
                  Py_ssize_t x, Py_ssize_t y, Py_ssize_t w, Py_ssize_t h,
                  int rng, bint use_sad):
    """Exhaustive displacement search for one region.

    `refp` is the reference plane padded by `rng` pixels of edge
    replication, so candidate (dx, dy) reads the block at
    (y + rng + dy, x + rng + dx) in padded coordinates.  Returns
    (dx, dy, cost); ties go to the smallest |dx|+|dy|, then dy, then dx.
    """
    cdef cnp.int64_t best_cost = -1
    cdef cnp.int64_t acc
    cdef int best_dx = 0, best_dy = 0, best_man = 0
    cdef int dx, dy, man
    cdef Py_ssize_t i, j, ry, rx
    cdef cnp.int64_t d
    cdef bint better
    with nogil:
        for dy in range(-rng, rng + 1):
            for dx in range(-rng, rng + 1):
                ry = y + rng + dy
                rx = x + rng + dx
                acc = 0
                for i in range(h):
                    if use_sad:
                        for j in range(w):
                            d = cur[y + i, x + j] - refp[ry + i, rx + j]
                            acc += d if d >= 0 else -d
                    else:
                        for j in range(w):
                            d = cur[y + i, x + j] - refp[ry + i, rx + j]
                            acc += d * d
                    if best_cost >= 0 and acc > best_cost:
                        break
                if best_cost >= 0 and acc > best_cost:
                    continue
                man = (dx if dx >= 0 else -dx) + (dy if dy >= 0 else -dy)
                if best_cost < 0 or acc < best_cost:
                    better = True
                elif acc == best_cost:
                    if man != best_man:
                        better = man < best_man
                    elif dy != best_dy:
                        better = dy < best_dy
                    else:
                        better = dx < best_dx
                else:
                    better = False
                if better:
                    best_cost = acc
                    best_man = man
                    best_dy = dy
                    best_dx = dx
    return best_dx, best_dy, best_cost
