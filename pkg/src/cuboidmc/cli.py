"""Command-line interface.

Exit codes: 0 success, 1 usage error (bad flags/geometry/preconditions),
2 data error (unreadable, truncated, or undecodable input).  Every run with
identical flags and inputs produces identical outputs, including with
--threads > 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import _kernels
from .errors import DataError
from .frames import (
    ALL_CHANNELS,
    LUMA_ONLY,
    RAW_FORMATS,
    Frame,
    Sequence,
    load_raw_video,
    psnr,
    read_image,
    save_raw_video,
    write_image,
)
from .motion import (
    SearchConfig,
    compensate,
    estimate_motion,
    fixed_block_grid,
    format_motion_dump,
    motion_bit_cost,
)
from .partition import (
    check_tiling,
    coarsen,
    cuboid_count_from_blocks,
    format_partition_dump,
    parse_partition_dump,
    partition,
)
from .pipeline import (
    PipelineConfig,
    RDPoint,
    SCHEME_COARSE,
    SCHEME_CUBOID,
    SCHEMES,
    bd_delta,
    run_gop,
    total_bits,
)
from .splittree import read_tree_file, tree_bit_cost, write_tree_file

PNM_SUFFIXES = (".pgm", ".ppm")


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def _add_input_args(sub: argparse.ArgumentParser, video: bool) -> None:
    sub.add_argument("input", help="input file: raw planar video, or a .pgm/.ppm image")
    sub.add_argument("--width", type=int, help="frame width in pixels (required for raw input)")
    sub.add_argument("--height", type=int, help="frame height in pixels (required for raw input)")
    sub.add_argument(
        "--format",
        choices=RAW_FORMATS,
        help="raw sample layout (required for raw input; PNM carries its own geometry)",
    )
    if video:
        sub.add_argument(
            "--max-frames", type=int, default=None, help="read at most this many frames (default: all)"
        )


def _load_sequence(args) -> Sequence:
    path = Path(args.input)
    if path.suffix.lower() in PNM_SUFFIXES:
        return Sequence(frames=(read_image(path),))
    missing = [f for f in ("width", "height", "format") if getattr(args, f) is None]
    if missing:
        raise ValueError(
            f"raw input needs explicit geometry: missing --{', --'.join(missing)}"
        )
    return load_raw_video(
        path, args.width, args.height, args.format, getattr(args, "max_frames", None)
    )


def _resolve_region_count(args, frame: Frame) -> int:
    if args.cuboids is not None:
        return args.cuboids
    if args.block_size is not None:
        return cuboid_count_from_blocks(frame.width, frame.height, args.block_size)
    raise ValueError("one of --cuboids or --block-size is required")


def _add_region_count_args(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--cuboids", type=int, help="target number of cuboids")
    group.add_argument(
        "--block-size",
        type=int,
        help="derive the cuboid count as the number of whole block x block tiles",
    )


def _add_channel_policy_arg(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--channel-policy",
        choices=(ALL_CHANNELS, LUMA_ONLY),
        default=ALL_CHANNELS,
        help="channels driving split decisions (default: all_channels)",
    )


def cmd_partition(args) -> int:
    seq = _load_sequence(args)
    frame = seq[args.frame_index]
    n = _resolve_region_count(args, frame)
    part = partition(frame, n, args.channel_policy)
    if args.out_tree:
        write_tree_file(args.out_tree, part.tree)
    if args.out_dump:
        Path(args.out_dump).write_text(format_partition_dump(part), encoding="utf-8")
    bits = tree_bit_cost(part.tree)
    print(f"cuboids {part.n_cuboids}")
    print(f"total_sse {_fmt(part.total_sse)}")
    print(f"tree_bits {bits}")
    if args.verify:
        if args.out_dump:
            total, cuboids = parse_partition_dump(Path(args.out_dump).read_text(encoding="utf-8"))
            check_tiling(cuboids, frame.width, frame.height)
            if cuboids != list(part.cuboids):
                raise DataError("re-ingested dump does not match the partition")
        if args.out_tree:
            tree = read_tree_file(args.out_tree)
            if list(tree.iter_leaf_regions()) != [
                (c.x, c.y, c.w, c.h) for c in part.cuboids
            ]:
                raise DataError("decoded tree does not reproduce the partition")
        print("verify ok")
    return 0


def cmd_coarsen(args) -> int:
    seq = _load_sequence(args)
    frame = seq[args.frame_index]
    n = _resolve_region_count(args, frame)
    part = partition(frame, n, args.channel_policy)
    coarse = coarsen(frame, part)
    if args.out:
        if Path(args.out).suffix.lower() in PNM_SUFFIXES:
            write_image(coarse, args.out)
        else:
            save_raw_video(Sequence(frames=(coarse,)), args.out)
    print(f"cuboids {part.n_cuboids}")
    print(f"tree_bits {tree_bit_cost(part.tree)}")
    print(f"psnr_db {_fmt(psnr(frame, coarse, LUMA_ONLY))}")
    return 0


def cmd_estimate(args) -> int:
    seq = _load_sequence(args)
    if max(args.current_index, args.reference_index) >= len(seq):
        raise ValueError(
            f"frame index out of range: sequence has {len(seq)} frames"
        )
    current = seq[args.current_index]
    reference = seq[args.reference_index]
    if args.cuboids is not None:
        part = partition(reference, args.cuboids, args.channel_policy)
        regions = part.cuboids
    elif args.block_size is not None:
        regions = fixed_block_grid(current.width, current.height, args.block_size)
    else:
        raise ValueError("one of --cuboids or --block-size is required")
    config = SearchConfig(range=args.range, metric=args.metric)
    field = estimate_motion(current, reference, regions, config, args.threads)
    predicted = compensate(reference, field)
    if args.out_field:
        Path(args.out_field).write_text(format_motion_dump(field), encoding="utf-8")
    print(f"regions {len(field.regions)}")
    print(f"motion_bits {motion_bit_cost(field, config)}")
    print(f"psnr_db {_fmt(psnr(current, predicted, LUMA_ONLY))}")
    return 0


_GOP_DEFAULTS = {
    "scheme": SCHEME_CUBOID,
    "partition_source": "anchor_only",
    "reference_mode": "chained_predicted",
    "range": 16,
    "metric": "sse",
    "channel_policy": ALL_CHANNELS,
    "quant_step": 1,
    "gop_size": 8,
}


def _build_pipeline_config(args) -> PipelineConfig:
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.config}: invalid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise DataError(f"{args.config}: config must be a JSON object")

    def pick(flag_name, cfg_key, default):
        flag = getattr(args, flag_name)
        if flag is not None:
            return flag
        return file_cfg.get(cfg_key, default)

    scheme = pick("scheme", "scheme", _GOP_DEFAULTS["scheme"])
    if scheme == SCHEME_COARSE:
        search = None
        partition_source = pick("partition_source", "partition_source", "per_frame")
    else:
        file_search = file_cfg.get("search") or {}
        search = SearchConfig(
            range=pick("range", None, file_search.get("range", _GOP_DEFAULTS["range"])),
            metric=pick("metric", None, file_search.get("metric", _GOP_DEFAULTS["metric"])),
        )
        partition_source = pick(
            "partition_source", "partition_source", _GOP_DEFAULTS["partition_source"]
        )
    return PipelineConfig(
        gop_size=pick("gop_size", "gop_size", _GOP_DEFAULTS["gop_size"]),
        scheme=scheme,
        n_cuboids=pick("cuboids", "n_cuboids", None),
        block_size=pick("block_size", "block_size", None),
        partition_source=partition_source,
        reference_mode=pick("reference_mode", "reference_mode", _GOP_DEFAULTS["reference_mode"]),
        search=search,
        channel_policy=pick("channel_policy", "channel_policy", _GOP_DEFAULTS["channel_policy"]),
        quant_step=pick("quant_step", "quant_step", _GOP_DEFAULTS["quant_step"]),
    )


def _write_frame_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scheme", "frame", "psnr_db", "sse", "tree_bits", "motion_bits"])
        for scheme, stats in rows:
            for s in stats:
                writer.writerow([scheme, s.index, _fmt(s.psnr), s.sse, s.tree_bits, s.motion_bits])


def _print_gop_summary(result, quant_step: int, enhancement_bits: int | None) -> None:
    total = total_bits(result, enhancement_bits, quant_step)
    print(f"scheme {result.scheme}")
    print(f"frames {len(result.stats)}")
    print(f"mean_prediction_psnr_db {_fmt(result.mean_prediction_psnr())}")
    print(f"tree_bits {result.tree_bits}")
    print(f"motion_bits {result.motion_bits}")
    print(f"side_info_bits {result.side_info_bits}")
    kind = "external" if enhancement_bits is not None else f"entropy-estimated (step {quant_step})"
    print(f"total_bits {total}  # residual bits {kind}")


def cmd_predict_gop(args) -> int:
    seq = _load_sequence(args)
    config = _build_pipeline_config(args)
    if len(seq) < config.gop_size:
        raise ValueError(f"sequence has {len(seq)} frames; gop-size is {config.gop_size}")
    gop = list(seq.frames[: config.gop_size])
    result = run_gop(gop, config, threads=args.threads)
    if args.report:
        _write_frame_csv(args.report, [(result.scheme, result.stats)])
    if args.out_frames:
        save_raw_video(Sequence(frames=result.predicted), args.out_frames)
    _print_gop_summary(result, config.quant_step, args.enhancement_bits)
    return 0


def cmd_compare(args) -> int:
    seq = _load_sequence(args)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    rows = []
    summaries = []
    for scheme in schemes:
        ns = argparse.Namespace(**vars(args))
        ns.scheme = scheme
        if scheme == SCHEME_COARSE:
            ns.partition_source = "per_frame"
        config = _build_pipeline_config(ns)
        if len(seq) < config.gop_size:
            raise ValueError(f"sequence has {len(seq)} frames; gop-size is {config.gop_size}")
        result = run_gop(list(seq.frames[: config.gop_size]), config, threads=args.threads)
        rows.append((scheme, result.stats))
        summaries.append((scheme, result))
    if args.report:
        _write_frame_csv(args.report, rows)
    for scheme, result in summaries:
        total = total_bits(result, args.enhancement_bits, result_quant_step(args))
        print(
            f"{scheme}: mean_prediction_psnr_db {_fmt(result.mean_prediction_psnr())} "
            f"side_info_bits {result.side_info_bits} total_bits {total}"
        )
    return 0


def result_quant_step(args) -> int:
    return args.quant_step if args.quant_step is not None else _GOP_DEFAULTS["quant_step"]


def _read_curve(path) -> list[RDPoint]:
    points = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    for row in csv.reader(text.splitlines()):
        if not row or not row[0].strip():
            continue
        first = row[0].strip().lower()
        if first in ("rate", "record"):  # header row of a plain or report CSV
            continue
        try:
            rate, q = float(row[0]), float(row[1])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}: malformed CSV row {row!r}") from exc
        points.append(RDPoint(rate=rate, psnr=q))
    return points


def cmd_bdrate(args) -> int:
    if len(args.curve) != 2:
        raise ValueError("exactly two --curve files are required")
    curve_a = _read_curve(args.curve[0])
    curve_b = _read_curve(args.curve[1])
    result = bd_delta(curve_a, curve_b)
    print(f"delta_rate_pct {result.delta_rate:.4f}")
    print(f"delta_psnr_db {result.delta_psnr:.4f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="cuboidmc",
        description=(
            "Content-adaptive rectangular partitioning for block-matching motion "
            f"estimation and rate-distortion evaluation (kernel backend: {_kernels.BACKEND})."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="partition one frame and dump/serialize it")
    _add_input_args(p, video=False)
    p.add_argument("--frame-index", type=int, default=0, help="frame to partition (default: 0)")
    _add_region_count_args(p)
    _add_channel_policy_arg(p)
    p.add_argument("--out-tree", help="write the serialized split tree here")
    p.add_argument("--out-dump", help="write the text partition dump here")
    p.add_argument(
        "--verify",
        action="store_true",
        help="re-ingest written outputs and check tiling/round-trip (default: off)",
    )
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("coarsen", help="replace each cuboid with its mean value")
    _add_input_args(p, video=False)
    p.add_argument("--frame-index", type=int, default=0, help="frame to coarsen (default: 0)")
    _add_region_count_args(p)
    _add_channel_policy_arg(p)
    p.add_argument("--out", help="write the coarse frame here (.pgm/.ppm or raw planar)")
    p.set_defaults(func=cmd_coarsen)

    p = sub.add_parser("estimate", help="full-search motion field between two frames")
    _add_input_args(p, video=True)
    p.add_argument("--current-index", type=int, default=1, help="current frame index (default: 1)")
    p.add_argument("--reference-index", type=int, default=0, help="reference frame index (default: 0)")
    _add_region_count_args(p)
    _add_channel_policy_arg(p)
    p.add_argument("--range", type=int, default=16, help="search range in pixels (default: 16)")
    p.add_argument("--metric", choices=("sse", "sad"), default="sse", help="matching metric (default: sse)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    p.add_argument("--out-field", help="write the motion-field dump here")
    p.set_defaults(func=cmd_estimate)

    for name, fn in (("predict-gop", cmd_predict_gop), ("compare", cmd_compare)):
        p = sub.add_parser(
            name,
            help=(
                "predict one GOP and report per-frame PSNR/bits"
                if name == "predict-gop"
                else "run several schemes on the same GOP and report side by side"
            ),
        )
        _add_input_args(p, video=True)
        p.add_argument("--config", help="JSON file of pipeline settings; flags override it")
        p.add_argument("--gop-size", type=int, default=None, help="frames per GOP (default: 8)")
        if name == "predict-gop":
            p.add_argument(
                "--scheme",
                choices=SCHEMES,
                default=None,
                help="prediction scheme (default: cuboid)",
            )
        else:
            p.add_argument(
                "--schemes",
                default="cuboid,fixed_block",
                help="comma-separated schemes to compare (default: cuboid,fixed_block)",
            )
        _add_region_count_args(p)
        p.add_argument(
            "--partition-source",
            choices=("anchor_only", "per_frame"),
            default=None,
            help="reuse the anchor partition or re-partition every frame (default: anchor_only)",
        )
        p.add_argument(
            "--reference-mode",
            choices=("chained_predicted", "previous_original"),
            default=None,
            help="predict from the previous predicted frame or the previous original "
            "(default: chained_predicted)",
        )
        p.add_argument("--range", type=int, default=None, help="search range in pixels (default: 16)")
        p.add_argument("--metric", choices=("sse", "sad"), default=None, help="matching metric (default: sse)")
        p.add_argument(
            "--channel-policy",
            choices=(ALL_CHANNELS, LUMA_ONLY),
            default=None,
            help="channels driving split decisions (default: all_channels)",
        )
        p.add_argument(
            "--quant-step",
            type=int,
            default=None,
            help="dead-zone quantizer step for the residual-bit estimate (default: 1, lossless)",
        )
        p.add_argument(
            "--enhancement-bits",
            type=int,
            default=None,
            help="externally measured enhancement-layer bits; skips the residual estimate",
        )
        p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
        p.add_argument("--report", help="write the per-frame CSV report here")
        if name == "predict-gop":
            p.add_argument("--out-frames", help="write predicted frames as raw planar video here")
        p.set_defaults(func=fn)
        if name == "compare":
            p.set_defaults(scheme=None)

    p = sub.add_parser("bdrate", help="Bjøntegaard deltas between two RD curve CSVs")
    p.add_argument(
        "--curve",
        action="append",
        required=True,
        help="curve CSV with rate,psnr rows; pass exactly twice (baseline first)",
    )
    p.set_defaults(func=cmd_bdrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
