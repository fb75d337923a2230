"""Full-search integer-pel motion estimation over arbitrary rectangle sets,
and motion-compensated frame construction with residuals.

The searched metric is evaluated on luma.  Displacements that would read
outside the reference clamp each source coordinate to the frame (edge
replication), so border regions need no special casing.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .frames import LUMA_ONLY, Frame, psnr
from .partition import Cuboid, check_tiling

METRIC_SSE = "sse"
METRIC_SAD = "sad"


@dataclass(frozen=True)
class MotionVector:
    """Integer displacement: reference position = current position + (dx, dy)."""

    dx: int
    dy: int


@dataclass(frozen=True)
class SearchConfig:
    """Full-search parameters: +/-range window, matching metric, edge policy."""

    range: int = 16
    metric: str = METRIC_SSE
    edge_policy: str = "clamp"

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("search range must be >= 0")
        if self.metric not in (METRIC_SSE, METRIC_SAD):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.edge_policy != "clamp":
            raise ValueError("only the clamp edge policy is supported")


@dataclass(frozen=True)
class MotionField:
    """One vector and matching cost per region; regions tile the frame."""

    regions: tuple[Cuboid, ...]
    vectors: tuple[MotionVector, ...]
    costs: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.regions) == len(self.vectors) == len(self.costs)):
            raise ValueError("regions, vectors, and costs must be parallel lists")


def fixed_block_grid(width: int, height: int, block: int) -> list[Cuboid]:
    """Row-major block grid; right/bottom partial blocks keep their true size."""
    if block < 1:
        raise ValueError("block must be >= 1")
    grid = []
    for y in range(0, height, block):
        for x in range(0, width, block):
            grid.append(Cuboid(x, y, min(block, width - x), min(block, height - y)))
    return grid


def _padded_luma(frame: Frame, pad: int) -> np.ndarray:
    plane = frame.planes[0].astype(np.int32)
    if pad == 0:
        return np.ascontiguousarray(plane)
    return np.pad(plane, pad, mode="edge")


def estimate_motion(
    current: Frame,
    reference: Frame,
    regions,
    config: SearchConfig = SearchConfig(),
    threads: int = 1,
) -> MotionField:
    """Exhaustive (2*range+1)^2 search for the best vector of every region.

    Ties are broken toward the shortest vector: smallest |dx|+|dy|, then dy,
    then dx, so identical frames always yield all-zero vectors.  Per-region
    searches are independent; `threads` only affects speed, never results.
    """
    if (current.width, current.height) != (reference.width, reference.height):
        raise ValueError("current and reference dimensions differ")
    regions = tuple(regions)
    check_tiling(regions, current.width, current.height)
    rng = config.range
    use_sad = config.metric == METRIC_SAD
    cur = np.ascontiguousarray(current.planes[0].astype(np.int32))
    refp = _padded_luma(reference, rng)

    def search(region: Cuboid):
        return _kernels.motion_search(
            cur, refp, region.x, region.y, region.w, region.h, rng, use_sad
        )

    if threads > 1 and len(regions) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(search, regions))
    else:
        results = [search(r) for r in regions]
    vectors = tuple(MotionVector(dx, dy) for dx, dy, _ in results)
    costs = tuple(int(c) for _, _, c in results)
    return MotionField(regions=regions, vectors=vectors, costs=costs)


def _halved(v: int) -> int:
    """Halve a vector component, rounding toward zero."""
    return -((-v) // 2) if v < 0 else v // 2


def compensate(reference: Frame, field: MotionField) -> Frame:
    """Assemble the predicted frame by copying displaced reference regions.

    Chroma planes of 4:2:0 frames use the luma regions mapped to the chroma
    grid and vectors halved toward zero; source reads clamp to the frame
    like the search did.
    """
    out_planes = []
    for ci, plane in enumerate(reference.planes):
        scale = reference.width // plane.shape[1]
        if scale == 1:
            moves = [(r.x, r.y, r.w, r.h, v.dx, v.dy) for r, v in zip(field.regions, field.vectors)]
        else:
            moves = []
            for r, v in zip(field.regions, field.vectors):
                x0, y0 = r.x // scale, r.y // scale
                x1, y1 = (r.x + r.w) // scale, (r.y + r.h) // scale
                moves.append((x0, y0, x1 - x0, y1 - y0, _halved(v.dx), _halved(v.dy)))
        pad = max((max(abs(dx), abs(dy)) for *_, dx, dy in moves), default=0)
        src = np.pad(plane, pad, mode="edge") if pad else plane
        out = np.empty_like(plane)
        for x, y, w, h, dx, dy in moves:
            if w <= 0 or h <= 0:
                continue
            sy, sx = y + pad + dy, x + pad + dx
            out[y : y + h, x : x + w] = src[sy : sy + h, sx : sx + w]
        out.setflags(write=False)
        out_planes.append(out)
    return Frame(
        planes=tuple(out_planes),
        bit_depth=reference.bit_depth,
        chroma_subsampling=reference.chroma_subsampling,
    )


@dataclass(frozen=True)
class Residual:
    """Signed per-sample difference current - predicted, with luma stats."""

    planes: tuple[np.ndarray, ...]
    sse: int
    psnr: float

    def add_to(self, predicted: Frame) -> Frame:
        """Reconstruct the original frame (lossless identity)."""
        planes = []
        for r, p in zip(self.planes, predicted.planes):
            planes.append((r + p.astype(np.int32)).astype(p.dtype))
        return Frame(
            planes=tuple(planes),
            bit_depth=predicted.bit_depth,
            chroma_subsampling=predicted.chroma_subsampling,
        )


def residual(current: Frame, predicted: Frame) -> Residual:
    """Per-sample signed difference plus luma SSE and PSNR of the prediction."""
    if (current.width, current.height, current.channels) != (
        predicted.width,
        predicted.height,
        predicted.channels,
    ):
        raise ValueError("current and predicted dimensions differ")
    planes = []
    for pc, pp in zip(current.planes, predicted.planes):
        d = pc.astype(np.int32) - pp.astype(np.int32)
        d.setflags(write=False)
        planes.append(d)
    luma = planes[0].astype(np.int64)
    sse = int((luma * luma).sum(dtype=np.int64))
    return Residual(planes=tuple(planes), sse=sse, psnr=psnr(current, predicted, LUMA_ONLY))


def vector_bits(config: SearchConfig) -> int:
    """Fixed-width bits per vector: two components of ceil(log2(2*range+1))."""
    span = 2 * config.range + 1
    per_component = (span - 1).bit_length() if span > 1 else 0
    return 2 * per_component


def motion_bit_cost(field: MotionField, config: SearchConfig) -> int:
    """Side-information bits to transmit the whole field, fixed-width coded."""
    return len(field.regions) * vector_bits(config)


def format_motion_dump(field: MotionField) -> str:
    """Debug dump: one `x y w h dx dy cost` line per region."""
    lines = [
        f"{r.x} {r.y} {r.w} {r.h} {v.dx} {v.dy} {c}"
        for r, v, c in zip(field.regions, field.vectors, field.costs)
    ]
    return "\n".join(lines) + "\n"


def mean_cost(field: MotionField) -> float:
    return sum(field.costs) / len(field.costs) if field.costs else math.nan
