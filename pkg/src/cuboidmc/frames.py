"""Frame and sequence containers, raw planar video I/O, and pixel metrics."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import VideoIOError

GRAY8 = "gray8"
YUV420P8 = "yuv420p8"
YUV444P8 = "yuv444p8"
RAW_FORMATS = (GRAY8, YUV420P8, YUV444P8)

LUMA_ONLY = "luma_only"
ALL_CHANNELS = "all_channels"


def _freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only view/copy of arr (copies only if arr is writable)."""
    a = np.ascontiguousarray(arr)
    if a.flags.writeable:
        if a.base is not None or a is arr:
            a = a.copy()
        a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Frame:
    """One video frame: a tuple of per-channel sample planes.

    Plane 0 is luma (or the only channel).  With ``chroma_subsampling="420"``
    and 3 channels, planes 1 and 2 are half resolution in both directions;
    otherwise all planes share plane 0's dimensions.  Planes are read-only
    2-D unsigned integer arrays; a Frame never changes after construction.
    """

    planes: tuple[np.ndarray, ...]
    bit_depth: int = 8
    chroma_subsampling: str = "444"

    def __post_init__(self):
        if not self.planes:
            raise ValueError("frame needs at least one plane")
        if self.bit_depth not in range(1, 17):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        if self.chroma_subsampling not in ("444", "420"):
            raise ValueError(f"unknown chroma subsampling {self.chroma_subsampling!r}")
        planes = tuple(_freeze(p) for p in self.planes)
        object.__setattr__(self, "planes", planes)
        h, w = planes[0].shape
        if w == 0 or h == 0:
            raise ValueError("frame dimensions must be positive")
        for i, p in enumerate(planes):
            if p.ndim != 2:
                raise ValueError(f"plane {i} is not 2-D")
            if p.dtype not in (np.uint8, np.uint16):
                raise ValueError(f"plane {i} has unsupported dtype {p.dtype}")
            expect = (h, w)
            if self.chroma_subsampling == "420" and i > 0:
                expect = (h // 2, w // 2)
            if p.shape != expect:
                raise ValueError(f"plane {i} shape {p.shape} != expected {expect}")
            limit = (1 << self.bit_depth) - 1
            if limit < np.iinfo(p.dtype).max and p.size and int(p.max()) > limit:
                raise ValueError(f"plane {i} exceeds {self.bit_depth}-bit range")
        if self.chroma_subsampling == "420":
            if len(planes) != 3:
                raise ValueError("420 subsampling requires exactly 3 channels")
            if w % 2 or h % 2:
                raise ValueError("420 subsampling requires even dimensions")

    @property
    def width(self) -> int:
        return self.planes[0].shape[1]

    @property
    def height(self) -> int:
        return self.planes[0].shape[0]

    @property
    def channels(self) -> int:
        return len(self.planes)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    @classmethod
    def gray(cls, samples, bit_depth: int = 8) -> "Frame":
        """Build a single-channel frame from a 2-D array."""
        a = np.asarray(samples)
        dtype = np.uint8 if bit_depth <= 8 else np.uint16
        return cls(planes=(a.astype(dtype, copy=False),), bit_depth=bit_depth)


@dataclass(frozen=True)
class Sequence:
    """An ordered run of frames with uniform geometry."""

    frames: tuple[Frame, ...]
    frame_rate: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("sequence needs at least one frame")
        f0 = self.frames[0]
        for f in self.frames[1:]:
            if (f.width, f.height, f.channels, f.bit_depth, f.chroma_subsampling) != (
                f0.width,
                f0.height,
                f0.channels,
                f0.bit_depth,
                f0.chroma_subsampling,
            ):
                raise ValueError("all frames in a sequence must share geometry")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i) -> Frame:
        return self.frames[i]


@dataclass(frozen=True)
class GopLayout:
    """Group-of-pictures layout: frame 0 of each group is the anchor."""

    gop_size: int
    anchor_index: int = 0

    def __post_init__(self):
        if self.gop_size < 1:
            raise ValueError("gop_size must be >= 1")
        if self.anchor_index != 0:
            raise ValueError("anchor must be the first frame of the group")


def split_gops(seq: Sequence, layout: GopLayout) -> list[list[Frame]]:
    """Chop a sequence into consecutive GOPs (last one may be short)."""
    g = layout.gop_size
    return [list(seq.frames[i : i + g]) for i in range(0, len(seq), g)]


def _plane_shapes(width: int, height: int, fmt: str) -> list[tuple[int, int]]:
    if fmt == GRAY8:
        return [(height, width)]
    if fmt == YUV444P8:
        return [(height, width)] * 3
    if fmt == YUV420P8:
        if width % 2 or height % 2:
            raise ValueError("yuv420p8 requires even dimensions")
        return [(height, width), (height // 2, width // 2), (height // 2, width // 2)]
    raise ValueError(f"unknown raw format {fmt!r}")


def frame_byte_size(width: int, height: int, fmt: str) -> int:
    """Bytes per frame for a raw planar format."""
    return sum(h * w for h, w in _plane_shapes(width, height, fmt))


def load_raw_video(
    path: str | os.PathLike,
    width: int,
    height: int,
    fmt: str,
    max_frames: int | None = None,
) -> Sequence:
    """Read a headerless planar video file.

    Planes are stored planar, row-major, top-left origin, frame after frame.
    Raises VideoIOError if the file ends inside a frame, naming the byte
    offset of the partial frame.
    """
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    shapes = _plane_shapes(width, height, fmt)
    fsize = frame_byte_size(width, height, fmt)
    data = np.fromfile(os.fspath(path), dtype=np.uint8)
    n_frames, extra = divmod(data.size, fsize)
    if extra:
        raise VideoIOError(
            f"{path}: truncated frame ({extra} of {fsize} bytes) at byte offset {n_frames * fsize}"
        )
    if n_frames == 0:
        raise VideoIOError(f"{path}: no complete frames")
    if max_frames is not None:
        n_frames = min(n_frames, max_frames)
    data.setflags(write=False)
    subsampling = "420" if fmt == YUV420P8 else "444"
    frames = []
    for k in range(n_frames):
        off = k * fsize
        planes = []
        for h, w in shapes:
            planes.append(data[off : off + h * w].reshape(h, w))
            off += h * w
        frames.append(Frame(planes=tuple(planes), chroma_subsampling=subsampling))
    return Sequence(frames=tuple(frames))


def save_raw_video(seq: Sequence, path: str | os.PathLike) -> None:
    """Write frames back out as headerless planar bytes (inverse of load)."""
    with open(path, "wb") as fh:
        for frame in seq.frames:
            for plane in frame.planes:
                fh.write(plane.tobytes())


_PNM_TOKEN = re.compile(rb"^\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pnm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    for _ in range(count):
        m = _PNM_TOKEN.match(data[pos:])
        if not m:
            raise VideoIOError("short PNM header")
        tokens.append(m.group(1))
        pos += m.end()
    return tokens, pos


def read_image(path: str | os.PathLike) -> Frame:
    """Read a binary PGM (P5) or PPM (P6) image as a 1- or 3-channel frame."""
    data = open(path, "rb").read()
    try:
        (magic, w_, h_, maxval_), pos = _read_pnm_tokens(data, 4)
        width, height, maxval = int(w_), int(h_), int(maxval_)
    except (ValueError, VideoIOError) as exc:
        raise VideoIOError(f"{path}: bad PNM header: {exc}") from exc
    if magic not in (b"P5", b"P6"):
        raise VideoIOError(f"{path}: not a binary PGM/PPM file")
    if maxval > 255:
        raise VideoIOError(f"{path}: only 8-bit PNM supported (maxval {maxval})")
    channels = 1 if magic == b"P5" else 3
    pos += 1  # single whitespace byte after maxval
    need = width * height * channels
    raster = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    if raster.size < need:
        raise VideoIOError(f"{path}: truncated raster")
    if channels == 1:
        planes = (raster.reshape(height, width),)
    else:
        rgb = raster.reshape(height, width, 3)
        planes = tuple(np.ascontiguousarray(rgb[:, :, c]) for c in range(3))
    return Frame(planes=planes)


def write_image(frame: Frame, path: str | os.PathLike) -> None:
    """Write a frame as binary PGM (1 channel) or PPM (3 channels, 4:4:4)."""
    if frame.bit_depth != 8:
        raise ValueError("PNM output supports 8-bit frames only")
    if frame.channels == 1:
        header = b"P5 %d %d 255\n" % (frame.width, frame.height)
        body = frame.planes[0].tobytes()
    elif frame.channels == 3 and frame.chroma_subsampling == "444":
        header = b"P6 %d %d 255\n" % (frame.width, frame.height)
        body = np.stack(frame.planes, axis=-1).tobytes()
    else:
        raise ValueError("PNM output needs 1 channel or 3 channels at 4:4:4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def _check_same_geometry(a: Frame, b: Frame) -> None:
    if (a.width, a.height, a.channels, a.bit_depth, a.chroma_subsampling) != (
        b.width,
        b.height,
        b.channels,
        b.bit_depth,
        b.chroma_subsampling,
    ):
        raise ValueError("frames do not share geometry")


def psnr(a: Frame, b: Frame, channel_policy: str = LUMA_ONLY) -> float:
    """Peak signal-to-noise ratio in dB; math.inf when the frames are equal.

    ``luma_only`` uses channel 0; ``all_channels`` pools the squared error
    over every stored sample of every plane.
    """
    _check_same_geometry(a, b)
    if channel_policy == LUMA_ONLY:
        pairs = [(a.planes[0], b.planes[0])]
    elif channel_policy == ALL_CHANNELS:
        pairs = list(zip(a.planes, b.planes))
    else:
        raise ValueError(f"unknown channel policy {channel_policy!r}")
    sse = 0
    n = 0
    for pa, pb in pairs:
        d = pa.astype(np.int64) - pb.astype(np.int64)
        sse += int((d * d).sum(dtype=np.int64))
        n += pa.size
    if sse == 0:
        return math.inf
    mse = sse / n
    return 10.0 * math.log10(a.max_value * a.max_value / mse)


def sse_region(a: Frame, b: Frame, region, channel: int = 0) -> int:
    """Exact integer sum of squared sample differences over one rectangle.

    ``region`` has attributes x, y, w, h in the coordinate system of the
    selected channel's plane.
    """
    _check_same_geometry(a, b)
    pa, pb = a.planes[channel], b.planes[channel]
    h, w = pa.shape
    x0, y0, x1, y1 = region.x, region.y, region.x + region.w, region.y + region.h
    if x0 < 0 or y0 < 0 or x1 > w or y1 > h or region.w < 1 or region.h < 1:
        raise ValueError(f"region {region} out of bounds for {w}x{h} plane")
    d = pa[y0:y1, x0:x1].astype(np.int64) - pb[y0:y1, x0:x1].astype(np.int64)
    return int((d * d).sum(dtype=np.int64))
