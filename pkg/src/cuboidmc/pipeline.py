"""GOP-level prediction pipeline, side-information accounting, and
rate-distortion evaluation (RD points, Bjøntegaard deltas, CSV reports).

The anchor (frame 0) is treated as available at both ends; its own
transmission cost is excluded, which is identical across the compared
schemes.  Reported PSNR is prediction-stage quality: the predicted frame
against the original, before any residual coding.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .frames import ALL_CHANNELS, Frame
from .motion import (
    MotionField,
    SearchConfig,
    compensate,
    estimate_motion,
    fixed_block_grid,
    motion_bit_cost,
    residual,
)
from .partition import CuboidPartition, coarsen, cuboid_count_from_blocks, partition
from .splittree import tree_bit_cost

SCHEME_CUBOID = "cuboid"
SCHEME_FIXED_BLOCK = "fixed_block"
SCHEME_COARSE = "coarse"
SCHEMES = (SCHEME_CUBOID, SCHEME_FIXED_BLOCK, SCHEME_COARSE)

ANCHOR_ONLY = "anchor_only"
PER_FRAME = "per_frame"
PARTITION_SOURCES = (ANCHOR_ONLY, PER_FRAME)

CHAINED_PREDICTED = "chained_predicted"
PREVIOUS_ORIGINAL = "previous_original"
REFERENCE_MODES = (CHAINED_PREDICTED, PREVIOUS_ORIGINAL)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything run_gop needs; JSON-serializable, overridable flag by flag.

    For cuboid and coarse schemes the region count comes from `n_cuboids`,
    or from `block_size` via the whole-blocks rule when n_cuboids is unset.
    The coarse scheme carries no motion: `search` must be None and frames
    are re-partitioned individually (`per_frame`).
    """

    gop_size: int
    scheme: str = SCHEME_CUBOID
    n_cuboids: int | None = None
    block_size: int | None = None
    partition_source: str = ANCHOR_ONLY
    reference_mode: str = CHAINED_PREDICTED
    search: SearchConfig | None = field(default_factory=SearchConfig)
    channel_policy: str = ALL_CHANNELS
    quant_step: int = 1

    def __post_init__(self):
        if self.gop_size < 1:
            raise ValueError("gop_size must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.partition_source not in PARTITION_SOURCES:
            raise ValueError(f"unknown partition source {self.partition_source!r}")
        if self.reference_mode not in REFERENCE_MODES:
            raise ValueError(f"unknown reference mode {self.reference_mode!r}")
        if self.quant_step < 1:
            raise ValueError("quant_step must be >= 1")
        if self.scheme == SCHEME_COARSE:
            if self.search is not None:
                raise ValueError("coarse scheme takes no motion search settings")
            if self.partition_source != PER_FRAME:
                raise ValueError("coarse scheme re-partitions every frame (per_frame)")
        else:
            if self.search is None:
                raise ValueError(f"{self.scheme} scheme requires a search config")
        if self.scheme == SCHEME_FIXED_BLOCK:
            if self.block_size is None:
                raise ValueError("fixed_block scheme requires block_size")
        elif self.n_cuboids is None and self.block_size is None:
            raise ValueError(f"{self.scheme} scheme requires n_cuboids or block_size")

    def resolve_n_cuboids(self, width: int, height: int) -> int:
        if self.n_cuboids is not None:
            return self.n_cuboids
        return cuboid_count_from_blocks(width, height, self.block_size)

    def to_json_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        search = d.get("search")
        if isinstance(search, dict):
            d["search"] = SearchConfig(**search)
        return cls(**d)


@dataclass(frozen=True)
class FrameStats:
    """Per-frame accounting: prediction quality and side-information bits."""

    index: int
    psnr: float
    sse: int
    tree_bits: int
    motion_bits: int

    @property
    def side_info_bits(self) -> int:
        return self.tree_bits + self.motion_bits


@dataclass(frozen=True)
class GopResult:
    """Outcome of running one GOP through a scheme."""

    scheme: str
    stats: tuple[FrameStats, ...]
    predicted: tuple[Frame, ...]
    fields: tuple[MotionField | None, ...]
    originals: tuple[Frame, ...]
    anchor_partition: CuboidPartition | None = None

    @property
    def side_info_bits(self) -> int:
        return sum(s.side_info_bits for s in self.stats)

    @property
    def tree_bits(self) -> int:
        return sum(s.tree_bits for s in self.stats)

    @property
    def motion_bits(self) -> int:
        return sum(s.motion_bits for s in self.stats)

    def mean_prediction_psnr(self) -> float:
        """Mean prediction PSNR over the predicted (non-anchor) frames.

        Infinity (a losslessly predicted frame) propagates into the mean.
        """
        values = [s.psnr for s in self.stats[1:]]
        if not values:
            return math.nan
        return sum(values) / len(values)


def run_gop(gop, config: PipelineConfig, threads: int = 1) -> GopResult:
    """Predict every frame of one GOP under the configured scheme.

    Frame 0 is the anchor and passes through unchanged (except under the
    coarse scheme, where every frame is replaced by its mean-filled
    approximation).  P-frame k is predicted from the previous predicted
    frame (chained) or the previous original, using the anchor's regions or
    its own per-frame partition.
    """
    frames = list(gop)
    if not frames:
        raise ValueError("GOP is empty")
    f0 = frames[0]
    if config.scheme == SCHEME_COARSE:
        return _run_coarse(frames, config)

    n = config.resolve_n_cuboids(f0.width, f0.height)
    anchor_partition = None
    if config.scheme == SCHEME_CUBOID:
        if config.partition_source == ANCHOR_ONLY:
            anchor_partition = partition(f0, n, config.channel_policy)
            anchor_regions = anchor_partition.cuboids
            anchor_tree_bits = tree_bit_cost(anchor_partition.tree)
        else:
            anchor_regions = None
            anchor_tree_bits = 0
    else:  # fixed_block: the grid is implied by the block size, no tree to send
        anchor_regions = tuple(fixed_block_grid(f0.width, f0.height, config.block_size))
        anchor_tree_bits = 0

    stats = [FrameStats(index=0, psnr=math.inf, sse=0, tree_bits=anchor_tree_bits, motion_bits=0)]
    predicted: list[Frame] = [f0]
    fields: list[MotionField | None] = [None]
    for k in range(1, len(frames)):
        current = frames[k]
        reference = predicted[k - 1] if config.reference_mode == CHAINED_PREDICTED else frames[k - 1]
        tree_bits = 0
        if anchor_regions is not None:
            regions = anchor_regions
        else:
            part = partition(current, n, config.channel_policy)
            regions = part.cuboids
            tree_bits = tree_bit_cost(part.tree)
        fld = estimate_motion(current, reference, regions, config.search, threads)
        pred = compensate(reference, fld)
        res = residual(current, pred)
        stats.append(
            FrameStats(
                index=k,
                psnr=res.psnr,
                sse=res.sse,
                tree_bits=tree_bits,
                motion_bits=motion_bit_cost(fld, config.search),
            )
        )
        predicted.append(pred)
        fields.append(fld)
    return GopResult(
        scheme=config.scheme,
        stats=tuple(stats),
        predicted=tuple(predicted),
        fields=tuple(fields),
        originals=tuple(frames),
        anchor_partition=anchor_partition,
    )


def _run_coarse(frames, config: PipelineConfig) -> GopResult:
    n = config.resolve_n_cuboids(frames[0].width, frames[0].height)
    stats, predicted = [], []
    for k, frame in enumerate(frames):
        part = partition(frame, n, config.channel_policy)
        coarse = coarsen(frame, part)
        res = residual(frame, coarse)
        stats.append(
            FrameStats(
                index=k,
                psnr=res.psnr,
                sse=res.sse,
                tree_bits=tree_bit_cost(part.tree),
                motion_bits=0,
            )
        )
        predicted.append(coarse)
    return GopResult(
        scheme=SCHEME_COARSE,
        stats=tuple(stats),
        predicted=tuple(predicted),
        fields=tuple([None] * len(frames)),
        originals=tuple(frames),
    )


def estimate_residual_bits(original: Frame, predicted: Frame, quant_step: int = 1) -> int:
    """Entropy estimate of coding one frame's quantized residual.

    Dead-zone quantization (sign * floor(|d| / step)) over every stored
    sample, then ceil(N * H) bits from the value histogram.  Step 1 is
    lossless.
    """
    if quant_step < 1:
        raise ValueError("quant_step must be >= 1")
    samples = []
    for pc, pp in zip(original.planes, predicted.planes):
        d = pc.astype(np.int32) - pp.astype(np.int32)
        q = np.sign(d) * (np.abs(d) // quant_step)
        samples.append(q.ravel())
    values = np.concatenate(samples)
    _, counts = np.unique(values, return_counts=True)
    if counts.size <= 1:
        return 0
    p = counts / values.size
    entropy = float(-(p * np.log2(p)).sum())
    return math.ceil(entropy * values.size)


def total_bits(result: GopResult, residual_bits: int | None = None, quant_step: int = 1) -> int:
    """Side-information bits plus residual/enhancement bits.

    Pass externally measured enhancement-layer bits when available;
    otherwise the residual cost is estimated per frame with
    estimate_residual_bits (estimation method noted in reports).
    """
    if residual_bits is None:
        residual_bits = sum(
            estimate_residual_bits(orig, pred, quant_step)
            for orig, pred in zip(result.originals, result.predicted)
        )
    return result.side_info_bits + residual_bits


@dataclass(frozen=True)
class RDPoint:
    """One rate-distortion measurement: rate in bits (or kbps), PSNR in dB."""

    rate: float
    psnr: float


@dataclass(frozen=True)
class BDResult:
    """Bjøntegaard deltas between two RD curves.

    delta_rate is the average rate difference in percent at equal quality
    (negative: the second curve is cheaper); delta_psnr the average quality
    difference in dB at equal rate.  The integration intervals actually
    used are recorded for both directions.
    """

    delta_rate: float
    delta_psnr: float
    overlap_psnr: tuple[float, float]
    overlap_log10_rate: tuple[float, float]


_BD_SAMPLES = 1000


def _validate_curve(points, name: str) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 4:
        raise ValueError(f"curve {name} has {len(points)} points; at least 4 are required")
    rates = np.array([p.rate for p in points], dtype=np.float64)
    quals = np.array([p.psnr for p in points], dtype=np.float64)
    if not np.isfinite(rates).all() or not np.isfinite(quals).all():
        raise ValueError(f"curve {name} has non-finite values")
    if (rates <= 0).any():
        raise ValueError(f"curve {name} has non-positive rates")
    if not (np.diff(rates) > 0).all() or not (np.diff(quals) > 0).all():
        raise ValueError(f"curve {name} must be strictly increasing in rate and PSNR")
    return rates, quals


def bd_delta(curve_a, curve_b) -> BDResult:
    """Bjøntegaard deltas of curve_b measured against curve_a.

    Cubic least-squares fits of PSNR vs log10(rate) (and of log10(rate) vs
    PSNR), integrated by the trapezoid rule over 1000 samples of the
    overlapping interval.
    """
    rates_a, quals_a = _validate_curve(curve_a, "a")
    rates_b, quals_b = _validate_curve(curve_b, "b")
    log_a, log_b = np.log10(rates_a), np.log10(rates_b)

    lo_r = max(log_a.min(), log_b.min())
    hi_r = min(log_a.max(), log_b.max())
    if hi_r <= lo_r:
        raise ValueError("curves have no overlapping rate interval")
    xs = np.linspace(lo_r, hi_r, _BD_SAMPLES)
    fit_a = np.polyfit(log_a, quals_a, 3)
    fit_b = np.polyfit(log_b, quals_b, 3)
    diff = np.polyval(fit_b, xs) - np.polyval(fit_a, xs)
    delta_psnr = float(np.trapezoid(diff, xs) / (hi_r - lo_r))

    lo_q = max(quals_a.min(), quals_b.min())
    hi_q = min(quals_a.max(), quals_b.max())
    if hi_q <= lo_q:
        raise ValueError("curves have no overlapping quality interval")
    ys = np.linspace(lo_q, hi_q, _BD_SAMPLES)
    rfit_a = np.polyfit(quals_a, log_a, 3)
    rfit_b = np.polyfit(quals_b, log_b, 3)
    rdiff = np.polyval(rfit_b, ys) - np.polyval(rfit_a, ys)
    mean_log_diff = float(np.trapezoid(rdiff, ys) / (hi_q - lo_q))
    delta_rate = (10.0**mean_log_diff - 1.0) * 100.0

    return BDResult(
        delta_rate=delta_rate,
        delta_psnr=delta_psnr,
        overlap_psnr=(float(lo_q), float(hi_q)),
        overlap_log10_rate=(float(lo_r), float(hi_r)),
    )


_REPORT_HEADER = ["record", "label", "rate", "psnr", "delta_rate_pct", "delta_psnr_db"]


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def emit_report(entries) -> str:
    """Render labeled RD curves plus their BD deltas as CSV text.

    `entries` is a list of (label, points, bd) tuples; `bd` is a BDResult
    relative to the first entry, or None for the baseline itself.  Point
    rows come first, then one `bd` summary row per non-None delta.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_REPORT_HEADER)
    for label, points, _ in entries:
        for p in points:
            writer.writerow(["point", label, _fmt(p.rate), _fmt(p.psnr), "", ""])
    for label, _, bd in entries:
        if bd is not None:
            writer.writerow(["bd", label, "", "", _fmt(bd.delta_rate), _fmt(bd.delta_psnr)])
    return out.getvalue()


def parse_report(text: str) -> tuple[dict[str, list[RDPoint]], dict[str, tuple[float, float]]]:
    """Read emit_report output back: curves by label, BD rows by label."""
    curves: dict[str, list[RDPoint]] = {}
    deltas: dict[str, tuple[float, float]] = {}
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != _REPORT_HEADER:
        raise ValueError("not a report CSV")
    for row in rows[1:]:
        if not row:
            continue
        kind, label = row[0], row[1]
        if kind == "point":
            curves.setdefault(label, []).append(RDPoint(float(row[2]), float(row[3])))
        elif kind == "bd":
            deltas[label] = (float(row[4]), float(row[5]))
        else:
            raise ValueError(f"unknown record kind {kind!r}")
    return curves, deltas
