"""From-scratch reference implementations used as test oracles.

Everything here recomputes results the slow, direct way: region sums by
slicing the pixel arrays (no integral tables), greedy selection by
rescanning every live rectangle each step (no heap, no caching), motion
search by explicit per-pixel clamped indexing (no padded planes).  Scores
share the library's canonical float64 formula, which the contract fixes.
"""

from __future__ import annotations

import math
import random

import numpy as np

from cuboidmc.partition import Axis, Cuboid
from cuboidmc.splittree import SplitNode, SplitTree


def plane_stats(plane, x0, y0, x1, y1):
    """(area, sum, squared sum) of [x0,x1) x [y0,y1) as exact Python ints."""
    region = plane[y0:y1, x0:x1].astype(np.int64)
    return int(region.size), int(region.sum()), int((region * region).sum())


def canonical_sse(s: int, q: int, a: int) -> float:
    """The library's scoring arithmetic: q - s^2/a in float64."""
    if a <= 0:
        return 0.0
    return float(q) - (float(s) * float(s)) / float(a)


def exact_sse_fraction(plane, x0, y0, x1, y1):
    """Exact rational SSE of a rectangle: (a*q - s^2, a)."""
    a, s, q = plane_stats(plane, x0, y0, x1, y1)
    return a * q - s * s, a


def _scaled(v: int, scale: int) -> int:
    return v // scale


def region_sse_channels(planes, scales, cub: Cuboid, channels) -> float:
    total = 0.0
    for c in channels:
        s = scales[c]
        a, ps, pq = plane_stats(
            planes[c],
            _scaled(cub.x, s),
            _scaled(cub.y, s),
            _scaled(cub.x + cub.w, s),
            _scaled(cub.y + cub.h, s),
        )
        total = total + canonical_sse(ps, pq, a)
    return total


def _child_score(planes, scales, channels, left_bounds, right_bounds) -> float:
    total = None
    for c in channels:
        s = scales[c]
        parts = []
        for (x0, y0, x1, y1) in (left_bounds, right_bounds):
            a, ps, pq = plane_stats(
                planes[c], _scaled(x0, s), _scaled(y0, s), _scaled(x1, s), _scaled(y1, s)
            )
            parts.append(canonical_sse(ps, pq, a))
        term = parts[0] + parts[1]
        total = term if total is None else total + term
    return total


def brute_best_split(planes, scales, cub: Cuboid, channels):
    """First strict-minimum candidate: vertical offsets 1..w-1, then horizontal.

    Returns (axis, offset, sse_after) or None for a 1x1 region.
    """
    if cub.w == 1 and cub.h == 1:
        return None
    best = None
    for off in range(1, cub.w):
        score = _child_score(
            planes,
            scales,
            channels,
            (cub.x, cub.y, cub.x + off, cub.y + cub.h),
            (cub.x + off, cub.y, cub.x + cub.w, cub.y + cub.h),
        )
        if best is None or score < best[2]:
            best = (Axis.VERTICAL, off, score)
    for off in range(1, cub.h):
        score = _child_score(
            planes,
            scales,
            channels,
            (cub.x, cub.y, cub.x + cub.w, cub.y + off),
            (cub.x, cub.y + off, cub.x + cub.w, cub.y + cub.h),
        )
        if best is None or score < best[2]:
            best = (Axis.HORIZONTAL, off, score)
    return best


def brute_greedy_partition(frame, n: int, channels=None):
    """Greedy partitioning with no acceleration structures.

    Rescans every live rectangle at each step; largest SSE gain wins, ties
    to the earliest-created rectangle.  Returns (steps, leaves) where steps
    are (region, axis, offset) tuples and leaves are in creation order.
    """
    planes = frame.planes
    scales = tuple(frame.width // p.shape[1] for p in planes)
    if channels is None:
        channels = range(len(planes))
    live = [Cuboid(0, 0, frame.width, frame.height)]  # creation order
    steps = []
    for _ in range(n - 1):
        best = None
        for idx, cub in enumerate(live):
            cand = brute_best_split(planes, scales, cub, channels)
            if cand is None:
                continue
            parent = region_sse_channels(planes, scales, cub, channels)
            gain = parent - cand[2]
            if gain < 0.0:
                gain = 0.0
            if best is None or gain > best[0]:
                best = (gain, idx, cand)
        if best is None:
            break
        _, idx, (axis, offset, _) = best
        cub = live.pop(idx)
        left, right = cub.split(axis, offset)
        steps.append((cub, axis, offset))
        live.append(left)
        live.append(right)
    return steps, live


def brute_motion_search(cur_plane, ref_plane, region: Cuboid, search_range: int, metric="sse"):
    """Full search with per-pixel clamped reference reads.

    Returns (dx, dy, cost); ties to smallest |dx|+|dy|, then dy, then dx.
    """
    h_img, w_img = ref_plane.shape
    block = cur_plane[region.y : region.y + region.h, region.x : region.x + region.w].astype(
        np.int64
    )
    ys = np.arange(region.y, region.y + region.h)
    xs = np.arange(region.x, region.x + region.w)
    best = None
    for dy in range(-search_range, search_range + 1):
        src_ys = np.clip(ys + dy, 0, h_img - 1)
        for dx in range(-search_range, search_range + 1):
            src_xs = np.clip(xs + dx, 0, w_img - 1)
            src = ref_plane[np.ix_(src_ys, src_xs)].astype(np.int64)
            d = block - src
            cost = int(np.abs(d).sum()) if metric == "sad" else int((d * d).sum())
            key = (cost, abs(dx) + abs(dy), dy, dx)
            if best is None or key < best:
                best = key
    cost, _, dy, dx = best
    return dx, dy, cost


def random_tree(rnd: random.Random, width: int, height: int, split_prob: float = 0.6,
                max_depth: int = 24) -> SplitTree:
    """A random valid split tree over the given root region."""

    def build(w, h, depth):
        node = SplitNode()
        n_candidates = w + h - 2
        if n_candidates < 1 or depth >= max_depth or rnd.random() > split_prob:
            return node
        idx = rnd.randrange(n_candidates)
        if idx < w - 1:
            node.axis = "vertical"
            node.offset = idx + 1
            dims = ((node.offset, h), (w - node.offset, h))
        else:
            node.axis = "horizontal"
            node.offset = idx - (w - 1) + 1
            dims = ((w, node.offset), (w, h - node.offset))
        node.left = build(*dims[0], depth + 1)
        node.right = build(*dims[1], depth + 1)
        return node

    return SplitTree(width=width, height=height, root=build(width, height, 0))


def walk_tree_bits(tree: SplitTree) -> int:
    """Independent bit-cost accounting: 1 type bit per node plus a
    ceil(log2(W + H - 2))-bit index per split node."""
    total = 0
    for node, _, _, w, h in tree.iter_nodes():
        total += 1
        if not node.is_leaf:
            k = w + h - 2
            total += math.ceil(math.log2(k)) if k > 1 else 0
    return total
