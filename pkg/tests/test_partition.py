import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference
from cuboidmc import (
    ALL_CHANNELS,
    LUMA_ONLY,
    Axis,
    Cuboid,
    Frame,
    best_split,
    build_integral_tables,
    coarsen,
    cuboid_count_from_blocks,
    partition,
    region_sse,
    sse_region,
)
from cuboidmc.partition import (
    check_tiling,
    format_partition_dump,
    parse_partition_dump,
    region_sum,
)
from synthetic import quadrant_frame, random_gray_frame


def test_tables_all_zero_frame():
    t = build_integral_tables(Frame.gray(np.zeros((4, 4), np.uint8)))
    assert (t.sums[0] == 0).all()
    assert (t.squares[0] == 0).all()
    assert t.sums[0].shape == (5, 5)


def test_tables_constant_frame():
    t = build_integral_tables(Frame.gray(np.full((2, 2), 5, np.uint8)))
    assert t.sums[0][2, 2] == 20
    assert t.squares[0][2, 2] == 100


def test_tables_match_naive_sums():
    rng = np.random.default_rng(0)
    frame = random_gray_frame(rng, 16, 16)
    t = build_integral_tables(frame)
    plane = frame.planes[0]
    for _ in range(200):
        x = int(rng.integers(0, 16))
        y = int(rng.integers(0, 16))
        w = int(rng.integers(1, 17 - x))
        h = int(rng.integers(1, 17 - y))
        a, s = region_sum(t, Cuboid(x, y, w, h), 0)
        na, ns, _ = reference.plane_stats(plane, x, y, x + w, y + h)
        assert (a, s) == (na, ns)


def test_region_sse_examples():
    assert region_sse(
        build_integral_tables(Frame.gray(np.full((3, 3), 7, np.uint8))), Cuboid(0, 0, 3, 3)
    ) == 0.0
    f = Frame.gray(np.array([[0, 10]], np.uint8))
    assert region_sse(build_integral_tables(f), Cuboid(0, 0, 2, 1)) == 50.0


def test_region_sse_matches_exact_oracle():
    rng = np.random.default_rng(1)
    frame = random_gray_frame(rng, 9, 8)
    t = build_integral_tables(frame)
    for _ in range(100):
        x = int(rng.integers(0, 9))
        y = int(rng.integers(0, 8))
        w = int(rng.integers(1, 10 - x))
        h = int(rng.integers(1, 9 - y))
        got = region_sse(t, Cuboid(x, y, w, h))
        nsse, a = reference.exact_sse_fraction(frame.planes[0], x, y, x + w, y + h)
        assert abs(got - nsse / a) < 0.5


def test_best_split_perfect_separation():
    f = Frame.gray(np.array([[0, 100], [0, 100]], np.uint8))
    s = best_split(build_integral_tables(f), Cuboid(0, 0, 2, 2))
    assert s.axis is Axis.VERTICAL
    assert s.offset == 1
    assert s.sse_after == 0.0
    assert s.sse_gain == 10000.0  # parent: 4 samples around mean 50


def test_best_split_1x1_is_none():
    f = Frame.gray(np.zeros((3, 3), np.uint8))
    assert best_split(build_integral_tables(f), Cuboid(1, 1, 1, 1)) is None


def test_best_split_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(50):
        frame = random_gray_frame(rng, 9, 6)
        t = build_integral_tables(frame)
        got = best_split(t, Cuboid(0, 0, 9, 6))
        axis, offset, after = reference.brute_best_split(
            frame.planes, (1,), Cuboid(0, 0, 9, 6), [0]
        )
        assert (got.axis, got.offset) == (axis, offset)
        assert got.sse_after == after


def test_best_split_tie_prefers_vertical_then_smallest_offset():
    # Constant frame: every candidate scores 0; first candidate must win.
    f = Frame.gray(np.full((4, 4), 9, np.uint8))
    s = best_split(build_integral_tables(f), Cuboid(0, 0, 4, 4))
    assert s.axis is Axis.VERTICAL
    assert s.offset == 1


def test_partition_n1_single_cuboid():
    f = quadrant_frame()
    p = partition(f, 1)
    assert p.cuboids == (Cuboid(0, 0, 4, 4),)
    assert p.steps == ()
    assert p.tree.n_nodes == 1


def test_partition_recovers_quadrants():
    p = partition(quadrant_frame(), 4)
    assert set(p.cuboids) == {
        Cuboid(0, 0, 2, 2),
        Cuboid(2, 0, 2, 2),
        Cuboid(0, 2, 2, 2),
        Cuboid(2, 2, 2, 2),
    }
    assert p.total_sse == 0.0


def test_partition_exhaustion_all_1x1():
    f = quadrant_frame()
    p = partition(f, 16)
    assert p.n_cuboids == 16
    assert all(c.w == 1 and c.h == 1 for c in p.cuboids)


def test_partition_rejects_bad_n():
    f = quadrant_frame()
    with pytest.raises(ValueError):
        partition(f, 0)
    with pytest.raises(ValueError):
        partition(f, 17)


def test_partition_matches_brute_greedy_small():
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = int(rng.integers(2, 13))
        h = int(rng.integers(2, 13))
        frame = random_gray_frame(rng, w, h)
        n = int(rng.integers(2, min(9, w * h + 1)))
        p = partition(frame, n)
        steps, leaves = reference.brute_greedy_partition(frame, n)
        assert [(s.region, s.axis, s.offset) for s in p.steps] == steps
        assert set(p.cuboids) == set(leaves)


@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
@settings(max_examples=25, deadline=None)
def test_partition_tiles_frame(seed, n):
    rng = np.random.default_rng(seed)
    frame = random_gray_frame(rng, 8, 7)
    p = partition(frame, min(n, 56))
    check_tiling(p.cuboids, 8, 7)
    assert sum(c.area for c in p.cuboids) == 56


def test_partition_sse_monotone_in_n():
    rng = np.random.default_rng(6)
    frame = random_gray_frame(rng, 12, 10)
    last = None
    for n in range(1, 14):
        total = partition(frame, n).total_sse
        if last is not None:
            assert total <= last + 1e-9
        last = total


def test_partition_node_count_identity():
    rng = np.random.default_rng(7)
    for n in (1, 2, 5, 9):
        frame = random_gray_frame(rng, 10, 10)
        p = partition(frame, n)
        assert p.tree.n_leaves == p.n_cuboids == n
        assert p.tree.n_nodes == 2 * n - 1


def test_partition_multichannel_changes_result():
    # Channel 1 carries the only structure; luma-only must ignore it.
    y = np.full((4, 4), 8, np.uint8)
    c = np.zeros((4, 4), np.uint8)
    c[:, 2:] = 200
    f = Frame(planes=(y, c, c))
    p_all = partition(f, 2, ALL_CHANNELS)
    p_luma = partition(f, 2, LUMA_ONLY)
    assert p_all.steps[0].axis is Axis.VERTICAL
    assert p_all.steps[0].offset == 2
    # Luma is flat: tie-break picks the first candidate instead.
    assert p_luma.steps[0].offset == 1


def test_partition_420_chroma_counts_once():
    y = np.full((4, 4), 8, np.uint8)
    c = np.array([[0, 200], [0, 200]], np.uint8)
    f = Frame(planes=(y, c, c), chroma_subsampling="420")
    p = partition(f, 2, ALL_CHANNELS)
    steps, _ = reference.brute_greedy_partition(f, 2)
    assert [(s.region, s.axis, s.offset) for s in p.steps] == steps


def test_coarsen_constant_frame_identity():
    f = Frame.gray(np.full((4, 4), 77, np.uint8))
    p = partition(f, 3)
    assert np.array_equal(coarsen(f, p).planes[0], f.planes[0])


def test_coarsen_mean_rounding():
    f = Frame.gray(np.array([[10, 20]], np.uint8))
    p = partition(f, 1)
    assert coarsen(f, p).planes[0].tolist() == [[15, 15]]


def test_coarsen_matches_naive_means():
    rng = np.random.default_rng(8)
    frame = random_gray_frame(rng, 16, 12)
    p = partition(frame, 16)
    coarse = coarsen(frame, p)
    plane = frame.planes[0].astype(np.int64)
    for cub in p.cuboids:
        region = plane[cub.y : cub.y + cub.h, cub.x : cub.x + cub.w]
        mean = (2 * int(region.sum()) + region.size) // (2 * region.size)
        assert (coarse.planes[0][cub.y : cub.y + cub.h, cub.x : cub.x + cub.w] == mean).all()


def test_coarsen_sse_equals_partition_sse_for_integer_means():
    # Each region has an integer mean but nonzero variance.
    img = np.array(
        [[0, 2, 10, 20], [2, 0, 20, 10], [0, 2, 10, 20], [2, 0, 20, 10]], np.uint8
    )
    f = Frame.gray(img)
    p = partition(f, 2)
    coarse = coarsen(f, p)
    assert sse_region(f, coarse, Cuboid(0, 0, 4, 4)) == p.total_sse


def test_coarsen_dim_mismatch():
    f = quadrant_frame()
    p = partition(f, 2)
    other = Frame.gray(np.zeros((8, 8), np.uint8))
    with pytest.raises(ValueError):
        coarsen(other, p)


def test_cuboid_count_from_blocks():
    assert cuboid_count_from_blocks(3840, 2160, 32) == 8040
    assert cuboid_count_from_blocks(64, 64, 32) == 4
    assert cuboid_count_from_blocks(65, 64, 32) == 4


def test_partition_dump_round_trip():
    p = partition(quadrant_frame(), 4)
    text = format_partition_dump(p)
    assert text.splitlines()[0].startswith("total_sse ")
    total, cuboids = parse_partition_dump(text)
    assert cuboids == list(p.cuboids)
    assert total == pytest.approx(p.total_sse, abs=1e-4)


def test_check_tiling_rejects_overlap_and_gap():
    with pytest.raises(ValueError):
        check_tiling([Cuboid(0, 0, 2, 2)], 4, 4)
    with pytest.raises(ValueError):
        check_tiling([Cuboid(0, 0, 4, 4), Cuboid(0, 0, 1, 1)], 4, 4)
