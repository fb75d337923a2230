"""Content-adaptive rectangular frame partitioning for motion-compensated
video prediction, with bit accounting and rate-distortion evaluation.

The hot scan kernels run from a compiled extension when available and fall
back to pure numpy otherwise; see `kernel_backend()`.  Both backends are
bit-identical.
"""

from ._kernels import BACKEND as _BACKEND
from .errors import BitstreamError, DataError, VideoIOError
from .frames import (
    ALL_CHANNELS,
    GRAY8,
    LUMA_ONLY,
    YUV420P8,
    YUV444P8,
    Frame,
    GopLayout,
    Sequence,
    load_raw_video,
    psnr,
    read_image,
    save_raw_video,
    split_gops,
    sse_region,
    write_image,
)
from .motion import (
    MotionField,
    MotionVector,
    Residual,
    SearchConfig,
    compensate,
    estimate_motion,
    fixed_block_grid,
    motion_bit_cost,
    residual,
)
from .partition import (
    Axis,
    Cuboid,
    CuboidPartition,
    IntegralTables,
    Split,
    best_split,
    build_integral_tables,
    coarsen,
    cuboid_count_from_blocks,
    partition,
    region_sse,
)
from .pipeline import (
    BDResult,
    FrameStats,
    GopResult,
    PipelineConfig,
    RDPoint,
    bd_delta,
    emit_report,
    estimate_residual_bits,
    run_gop,
    total_bits,
)
from .splittree import (
    Bitstream,
    SplitNode,
    SplitTree,
    decode_tree,
    encode_tree,
    tree_bit_bound,
    tree_bit_cost,
)

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which scan-kernel backend is active: "compiled" or "python"."""
    return _BACKEND
