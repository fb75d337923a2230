"""Pure numpy fallback for the scan kernels.

Bit-compatible with the compiled backend: split scores use the identical
float64 operation order (sum/square-sum loaded exactly from int64 tables,
then ``q - (s*s)/a`` per child, left child + right child per candidate),
and motion costs are exact int64, so partitions and motion fields come out
identical whichever backend is active.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND = "python"

# Candidate-cost slabs larger than this fall back to a per-candidate loop to
# bound peak memory (full-search on very large regions).
_SLAB_LIMIT = 8_000_000


def _rects_sse(sums, sqs, x0, y0, x1, y1):
    """Float64 SSE-around-the-mean for rectangles [x0,x1) x [y0,y1).

    Any argument may be an array; empty rectangles score 0.0.
    """
    x0, y0, x1, y1 = np.asarray(x0), np.asarray(y0), np.asarray(x1), np.asarray(y1)
    a = (x1 - x0).astype(np.int64) * (y1 - y0).astype(np.int64)
    s = sums[y1, x1] - sums[y0, x1] - sums[y1, x0] + sums[y0, x0]
    q = sqs[y1, x1] - sqs[y0, x1] - sqs[y1, x0] + sqs[y0, x0]
    af = a.astype(np.float64)
    sf = s.astype(np.float64)
    qf = q.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = qf - (sf * sf) / af
    return np.where(a > 0, v, 0.0)


def split_scores(sums, sqs, x, y, w, h, scale):
    """Score every candidate split of region (x, y, w, h) in one channel.

    Returns float64[w + h - 2]: vertical offsets 1..w-1 first, then
    horizontal offsets 1..h-1; each entry is left-child SSE + right-child
    SSE in the channel's plane (coordinates divided by `scale` for
    subsampled planes).
    """
    cx0, cy0 = x // scale, y // scale
    cx1, cy1 = (x + w) // scale, (y + h) // scale
    out = np.empty(w + h - 2, dtype=np.float64)
    if w > 1:
        cs = (x + np.arange(1, w)) // scale
        out[: w - 1] = _rects_sse(sums, sqs, cx0, cy0, cs, cy1) + _rects_sse(
            sums, sqs, cs, cy0, cx1, cy1
        )
    if h > 1:
        cs = (y + np.arange(1, h)) // scale
        out[w - 1 :] = _rects_sse(sums, sqs, cx0, cy0, cx1, cs) + _rects_sse(
            sums, sqs, cx0, cs, cx1, cy1
        )
    return out


def _candidate_costs(cur, refp, x, y, w, h, rng, use_sad):
    """Int64 matching cost of every displacement, dy-major then dx."""
    n = 2 * rng + 1
    block = cur[y : y + h, x : x + w].astype(np.int64)
    costs = np.empty((n, n), dtype=np.int64)
    if n * h * w <= _SLAB_LIMIT:
        for k in range(n):
            slab = refp[y + k : y + k + h, x : x + 2 * rng + w]
            win = sliding_window_view(slab, (h, w))[0].astype(np.int64)
            d = win - block
            costs[k] = np.abs(d).sum(axis=(1, 2)) if use_sad else (d * d).sum(axis=(1, 2))
    else:
        for k in range(n):
            for j in range(n):
                d = refp[y + k : y + k + h, x + j : x + j + w].astype(np.int64) - block
                costs[k, j] = np.abs(d).sum() if use_sad else (d * d).sum()
    return costs


def motion_search(cur, refp, x, y, w, h, rng, use_sad):
    """Exhaustive displacement search for one region.

    `refp` is the reference plane padded by `rng` pixels of edge
    replication, so candidate (dx, dy) reads the block at
    (y + rng + dy, x + rng + dx) in padded coordinates.  Returns
    (dx, dy, cost); ties go to the smallest |dx|+|dy|, then dy, then dx.
    """
    n = 2 * rng + 1
    costs = _candidate_costs(cur, refp, x, y, w, h, rng, use_sad).ravel()
    dys, dxs = np.divmod(np.arange(n * n), n)
    dys -= rng
    dxs -= rng
    manhattan = np.abs(dxs) + np.abs(dys)
    best = np.lexsort((dxs, dys, manhattan, costs))[0]
    return int(dxs[best]), int(dys[best]), int(costs[best])
