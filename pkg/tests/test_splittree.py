import random

import numpy as np
import pytest

import reference
from cuboidmc import (
    Bitstream,
    BitstreamError,
    Frame,
    SplitNode,
    SplitTree,
    decode_tree,
    encode_tree,
    partition,
    tree_bit_bound,
    tree_bit_cost,
)
from cuboidmc.splittree import (
    BitReader,
    BitWriter,
    index_bits,
    read_tree_file,
    write_tree_file,
)


def leaf_tree(w, h):
    return SplitTree(width=w, height=h, root=SplitNode())


def test_index_bits():
    assert index_bits(2, 2) == 1  # 2 candidates
    assert index_bits(64, 64) == 7  # 126 candidates
    assert index_bits(1, 2) == 0  # single candidate is implied
    assert index_bits(3840, 2160) == 13


def test_bitwriter_msb_first():
    w = BitWriter()
    w.write(1, 1)
    w.write(0b0110, 4)
    bs = w.getvalue()
    assert bs.bit_length == 5
    assert bs.data == bytes([0b10110000])
    r = BitReader(bs)
    assert r.read(1) == 1
    assert r.read(4) == 0b0110
    with pytest.raises(BitstreamError):
        r.read(1)


def test_bitstream_invariants():
    with pytest.raises(ValueError):
        Bitstream(data=b"\x01", bit_length=4)  # nonzero pad
    with pytest.raises(ValueError):
        Bitstream(data=b"\x00\x00", bit_length=4)  # wrong container size
    Bitstream(data=b"\x10", bit_length=4)


def test_encode_single_leaf_is_one_bit():
    bs = encode_tree(leaf_tree(16, 16))
    assert bs.bit_length == 1
    assert bs.data == b"\x00"


def test_encode_one_vertical_split_2x2():
    root = SplitNode(axis="vertical", offset=1, left=SplitNode(), right=SplitNode())
    bs = encode_tree(SplitTree(width=2, height=2, root=root))
    # 1 type bit + 1 index bit + two leaf bits
    assert bs.bit_length == 4


def test_encode_one_split_64x64():
    root = SplitNode(axis="horizontal", offset=20, left=SplitNode(), right=SplitNode())
    bs = encode_tree(SplitTree(width=64, height=64, root=root))
    assert bs.bit_length == 3 + 7


def test_decode_single_leaf():
    t = decode_tree(Bitstream(data=b"\x00", bit_length=1), 37, 12)
    assert t.root.is_leaf
    assert t.n_leaves == 1


def test_round_trip_random_trees():
    rnd = random.Random(99)
    for _ in range(300):
        w = rnd.randrange(1, 65)
        h = rnd.randrange(1, 65)
        tree = reference.random_tree(rnd, w, h)
        bs = encode_tree(tree)
        back = decode_tree(bs, w, h)
        assert back == tree
        assert bs.bit_length == tree_bit_cost(tree)


def test_truncated_stream_errors():
    root = SplitNode(axis="vertical", offset=3, left=SplitNode(), right=SplitNode())
    bs = encode_tree(SplitTree(width=8, height=8, root=root))
    cut = Bitstream(data=bytes([bs.data[0] & 0xF0]), bit_length=4)
    with pytest.raises(BitstreamError):
        decode_tree(cut, 8, 8)


def test_out_of_range_index_errors():
    # 8x8 region: 14 candidates, 4 index bits; index 15 is invalid.
    w = BitWriter()
    w.write(1, 1)
    w.write(15, 4)
    w.write(0, 1)
    w.write(0, 1)
    with pytest.raises(BitstreamError, match="out of range"):
        decode_tree(w.getvalue(), 8, 8)


def test_trailing_bits_error():
    w = BitWriter()
    w.write(0, 1)  # complete single-leaf tree
    w.write(1, 1)  # junk afterwards
    with pytest.raises(BitstreamError, match="unconsumed"):
        decode_tree(w.getvalue(), 4, 4)


def test_split_bit_on_1x1_errors():
    w = BitWriter()
    w.write(1, 1)
    with pytest.raises(BitstreamError):
        decode_tree(w.getvalue(), 1, 1)


def test_node_count_identity_on_partitions():
    rng = np.random.default_rng(17)
    frame = Frame.gray(rng.integers(0, 256, (12, 14), dtype=np.uint8))
    for n in (1, 2, 3, 7, 12):
        tree = partition(frame, n).tree
        tree.validate()
        assert tree.n_leaves == n
        assert tree.n_nodes == 2 * n - 1


def test_bit_cost_equals_stream_length_and_walk():
    rng = np.random.default_rng(18)
    frame = Frame.gray(rng.integers(0, 256, (16, 16), dtype=np.uint8))
    for n in (1, 4, 9, 16):
        tree = partition(frame, n).tree
        bs = encode_tree(tree)
        assert tree_bit_cost(tree) == bs.bit_length == reference.walk_tree_bits(tree)


def test_bit_bound():
    assert tree_bit_bound(16, 3840, 2160) == 31 + 15 * 13 == 226
    rng = np.random.default_rng(19)
    frame = Frame.gray(rng.integers(0, 256, (20, 20), dtype=np.uint8))
    for n in (2, 8, 16):
        tree = partition(frame, n).tree
        assert tree_bit_cost(tree) <= tree_bit_bound(n, 20, 20)


def test_tree_file_round_trip(tmp_path):
    rng = np.random.default_rng(20)
    frame = Frame.gray(rng.integers(0, 256, (24, 16), dtype=np.uint8))
    tree = partition(frame, 7).tree
    path = tmp_path / "part.tree"
    write_tree_file(path, tree)
    raw = path.read_bytes()
    assert raw[:8] == b"CPSTREE1"
    assert int.from_bytes(raw[8:12], "big") == 16
    assert int.from_bytes(raw[12:16], "big") == 24
    back = read_tree_file(path)
    assert list(back.iter_leaf_regions()) == list(tree.iter_leaf_regions())


def test_tree_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.tree"
    path.write_bytes(b"NOTATREE" + bytes(12))
    with pytest.raises(BitstreamError):
        read_tree_file(path)
    path.write_bytes(b"CPSTREE1" + (16).to_bytes(4, "big") + (16).to_bytes(4, "big") + (40).to_bytes(4, "big") + b"\x00")
    with pytest.raises(BitstreamError):
        read_tree_file(path)


def test_deep_chain_tree_round_trip():
    # 600-leaf comb tree: must not hit the recursion limit.
    root = SplitNode()
    node = root
    for _ in range(599):
        node.axis = "vertical"
        node.offset = 1
        node.left = SplitNode()
        node.right = SplitNode()
        node = node.right
    tree = SplitTree(width=1024, height=1, root=root)
    tree.validate()
    bs = encode_tree(tree)
    back = decode_tree(bs, 1024, 1)
    assert back.n_leaves == 600
    assert tree_bit_cost(tree) == bs.bit_length
