"""Binary split-tree structure and its bit-exact serialization.

Every node costs one type bit (1 = split, 0 = leaf); a split node of a
W x H region adds a fixed-width candidate index of ceil(log2(W + H - 2))
bits, indexing vertical offsets 1..W-1 then horizontal offsets 1..H-1.
Node regions are recomputed top-down by the decoder and never transmitted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import BitstreamError

MAGIC = b"CPSTREE1"


def index_bits(w: int, h: int) -> int:
    """Bits needed to index one of the w + h - 2 candidate splits."""
    n_candidates = w + h - 2
    return (n_candidates - 1).bit_length() if n_candidates > 1 else 0


def _is_vertical(axis) -> bool:
    # Accepts the partition Axis enum or its plain string value.
    return getattr(axis, "value", axis) == "vertical"


@dataclass(eq=True)
class SplitNode:
    """Tree node; axis None marks a leaf.  Left child is the left/top half."""

    axis: object | None = None
    offset: int = 0
    left: "SplitNode | None" = None
    right: "SplitNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.axis is None

    def child_regions(self, x: int, y: int, w: int, h: int):
        """((left-or-top), (right-or-bottom)) sub-rectangles of this split."""
        o = self.offset
        if _is_vertical(self.axis):
            return (x, y, o, h), (x + o, y, w - o, h)
        return (x, y, w, o), (x, y + o, w, h - o)


@dataclass(frozen=True)
class SplitTree:
    """A full binary tree of splits over a width x height root region."""

    width: int
    height: int
    root: SplitNode

    def iter_nodes(self):
        """Pre-order (node, x, y, w, h) walk, left/top child first."""
        stack = [(self.root, 0, 0, self.width, self.height)]
        while stack:
            node, x, y, w, h = stack.pop()
            yield node, x, y, w, h
            if node.is_leaf:
                continue
            left_r, right_r = node.child_regions(x, y, w, h)
            stack.append((node.right, *right_r))
            stack.append((node.left, *left_r))

    def iter_leaf_regions(self):
        """Pre-order (x, y, w, h) rectangles of the leaves."""
        for node, x, y, w, h in self.iter_nodes():
            if node.is_leaf:
                yield (x, y, w, h)

    def leaf_cuboids(self, factory):
        """Leaves wrapped by `factory(x, y, w, h)`, in pre-order."""
        return [factory(*r) for r in self.iter_leaf_regions()]

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    @property
    def n_leaves(self) -> int:
        return sum(1 for _ in self.iter_leaf_regions())

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        leaves = nodes = 0
        for node, _, _, w, h in self.iter_nodes():
            nodes += 1
            if node.is_leaf:
                leaves += 1
                if node.left is not None or node.right is not None:
                    raise ValueError("leaf with children")
                continue
            if node.left is None or node.right is None:
                raise ValueError("split node missing a child")
            extent = w if _is_vertical(node.axis) else h
            if not 0 < node.offset < extent:
                raise ValueError(f"offset {node.offset} not interior to {w}x{h} node")
        if nodes != 2 * leaves - 1:
            raise ValueError(f"{leaves} leaves but {nodes} nodes")


@dataclass(frozen=True)
class Bitstream:
    """A bit string in a byte-aligned container; pad bits are zero."""

    data: bytes
    bit_length: int

    def __post_init__(self):
        if len(self.data) != (self.bit_length + 7) // 8:
            raise ValueError("container size does not match bit length")
        pad = len(self.data) * 8 - self.bit_length
        if pad and (self.data[-1] & ((1 << pad) - 1)):
            raise ValueError("nonzero padding bits")


class BitWriter:
    """MSB-first bit packer."""

    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self.bit_length = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if not 0 <= value < (1 << nbits):
            raise ValueError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        self.bit_length += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
            self._acc &= (1 << self._nacc) - 1

    def getvalue(self) -> Bitstream:
        data = bytes(self._buf)
        if self._nacc:
            data += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return Bitstream(data=data, bit_length=self.bit_length)


class BitReader:
    """MSB-first bit unpacker over a Bitstream."""

    def __init__(self, bs: Bitstream):
        self._data = bs.data
        self._nbits = bs.bit_length
        self.pos = 0

    def read(self, nbits: int) -> int:
        if self.pos + nbits > self._nbits:
            raise BitstreamError(
                f"bitstream exhausted: need {nbits} bits at position {self.pos} of {self._nbits}"
            )
        value = 0
        for _ in range(nbits):
            byte = self._data[self.pos >> 3]
            value = (value << 1) | ((byte >> (7 - (self.pos & 7))) & 1)
            self.pos += 1
        return value


def encode_tree(tree: SplitTree) -> Bitstream:
    """Serialize a split tree: pre-order, type bit per node, index per split."""
    writer = BitWriter()
    for node, _, _, w, h in tree.iter_nodes():
        if node.is_leaf:
            writer.write(0, 1)
            continue
        writer.write(1, 1)
        n_candidates = w + h - 2
        if n_candidates < 1:
            raise ValueError("split node on a 1x1 region")
        idx = (node.offset - 1) if _is_vertical(node.axis) else (w - 1) + (node.offset - 1)
        if not 0 <= idx < n_candidates:
            raise ValueError(f"offset {node.offset} invalid for {w}x{h} node")
        writer.write(idx, index_bits(w, h))
    return writer.getvalue()


def decode_tree(bits: Bitstream, width: int, height: int, axis_factory=None) -> SplitTree:
    """Rebuild a split tree from its serialized form.

    Raises BitstreamError when the stream ends mid-node, when a candidate
    index is out of range for its region, or when payload bits remain after
    the tree is complete.  `axis_factory(name)` converts "vertical" /
    "horizontal" into the caller's axis type (defaults to the plain string).
    """
    if width < 1 or height < 1:
        raise ValueError("dimensions must be positive")
    make_axis = axis_factory or (lambda name: name)
    reader = BitReader(bits)
    root = SplitNode()
    # Explicit stack: deep chain trees must not hit the recursion limit.
    work: list[tuple[SplitNode, int, int]] = [(root, width, height)]
    while work:
        node, w, h = work.pop()
        if reader.read(1) == 0:
            continue
        n_candidates = w + h - 2
        if n_candidates < 1:
            raise BitstreamError("split node on a 1x1 region")
        idx = reader.read(index_bits(w, h))
        if idx >= n_candidates:
            raise BitstreamError(
                f"candidate index {idx} out of range for {w}x{h} node ({n_candidates} candidates)"
            )
        if idx < w - 1:
            node.axis = make_axis("vertical")
            node.offset = idx + 1
            left_dims, right_dims = (node.offset, h), (w - node.offset, h)
        else:
            node.axis = make_axis("horizontal")
            node.offset = idx - (w - 1) + 1
            left_dims, right_dims = (w, node.offset), (w, h - node.offset)
        node.left = SplitNode()
        node.right = SplitNode()
        work.append((node.right, *right_dims))
        work.append((node.left, *left_dims))  # left on top, decoded first
    if reader.pos != bits.bit_length:
        raise BitstreamError(
            f"{bits.bit_length - reader.pos} unconsumed payload bits after decode"
        )
    return SplitTree(width=width, height=height, root=root)


def tree_bit_cost(tree: SplitTree) -> int:
    """Exact serialized size in bits (equals len of encode_tree's output)."""
    total = 0
    for node, _, _, w, h in tree.iter_nodes():
        total += 1
        if not node.is_leaf:
            total += index_bits(w, h)
    return total


def tree_bit_bound(n_leaves: int, width: int, height: int) -> int:
    """Analytic upper bound: every split charged at root-region width.

    (2n - 1) type bits plus (n - 1) indices of ceil(log2(W + H - 2)) bits.
    """
    return (2 * n_leaves - 1) + (n_leaves - 1) * index_bits(width, height)


def write_tree_file(path, tree: SplitTree) -> None:
    """Serialize to file: magic, big-endian width/height/bit count, payload."""
    bs = encode_tree(tree)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">III", tree.width, tree.height, bs.bit_length))
        fh.write(bs.data)


def read_tree_file(path, axis_factory=None) -> SplitTree:
    """Inverse of write_tree_file."""
    raw = open(path, "rb").read()
    if len(raw) < len(MAGIC) + 12 or raw[: len(MAGIC)] != MAGIC:
        raise BitstreamError(f"{path}: not a split-tree file")
    width, height, nbits = struct.unpack(">III", raw[len(MAGIC) : len(MAGIC) + 12])
    payload = raw[len(MAGIC) + 12 :]
    if len(payload) != (nbits + 7) // 8:
        raise BitstreamError(f"{path}: payload is {len(payload)} bytes, header says {nbits} bits")
    return decode_tree(Bitstream(data=payload, bit_length=nbits), width, height, axis_factory)
