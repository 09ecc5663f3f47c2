import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsedist.core import (COORD, RANGE, SCALAR, CoordRange, IndexSpace, Partition, Region,
                             chunk_blocks, copy_partition, image, intersect, partition_by_bounds,
                             position_blocks, preimage, replicated, universe_blocks)
from sparsedist.errors import BoundsError, ShapeError


def ranges(pairs, dest):
    return Region(IndexSpace((len(pairs),)), RANGE, pairs, IndexSpace((dest,)))


def test_index_space_volume():
    assert IndexSpace((3, 4)).volume == 12
    assert IndexSpace(()).volume == 1
    assert IndexSpace((0, 5)).volume == 0
    with pytest.raises(ShapeError):
        IndexSpace((-1,))


def test_coord_range_empty_form():
    assert CoordRange(3, 2).empty and len(CoordRange(3, 2)) == 0
    assert len(CoordRange(0, 4)) == 5


def test_region_kinds_and_bounds():
    assert Region(IndexSpace((2,)), SCALAR, [1.5, 2.5])[1] == 2.5
    assert Region(IndexSpace((2,)), COORD, [4, 7])[0] == 4
    assert ranges([(0, 1), (2, 1)], 2)[1].empty
    with pytest.raises(BoundsError):
        ranges([(0, 3)], 3)
    with pytest.raises(ShapeError):
        Region(IndexSpace((3,)), SCALAR, [1.0])


def test_partition_disjointness_is_computed():
    space = IndexSpace((4,))
    assert Partition(space, {0: [0, 1], 1: [2, 3]}).disjoint
    assert not Partition(space, {0: [0, 1], 1: [1]}).disjoint
    assert Partition(space, {0: [], 1: []}).disjoint
    with pytest.raises(BoundsError):
        Partition(space, {0: [4]})


def test_image_example():
    src = ranges([(0, 1), (2, 2), (3, 4)], 5)
    red, blue = 0, 1
    out = image(src, Partition(src.space, {red: [0], blue: [1, 2]}))
    assert out.as_sets() == {red: {0, 1}, blue: {2, 3, 4}}
    assert out.disjoint


def test_image_single_color_covers_union():
    src = ranges([(0, 1), (3, 2), (2, 4)], 6)
    assert image(src, Partition(src.space, {0: [0, 1, 2]})).as_sets() == {0: {0, 1, 2, 3, 4}}


def test_preimage_example():
    src = ranges([(0, 2), (3, 3)], 4)
    a, b = 0, 1
    out = preimage(src, Partition(IndexSpace((4,)), {a: [0, 1], b: [2, 3]}))
    assert out.as_sets() == {a: {0}, b: {0, 1}}
    assert not out.disjoint


def test_preimage_skips_empty_ranges():
    src = ranges([(0, 1), (2, 1), (2, 2)], 3)
    out = preimage(src, Partition(IndexSpace((3,)), {0: [0, 1, 2]}))
    assert out.as_sets() == {0: {0, 2}}


def test_image_rejects_non_range_region():
    crd = Region(IndexSpace((2,)), COORD, [0, 1])
    with pytest.raises(TypeError):
        image(crd, Partition(crd.space, {0: [0]}), IndexSpace((2,)))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_preimage_of_image_keeps_colors(data):
    n = data.draw(st.integers(1, 20))
    lengths = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    starts = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(int)
    pairs = [(int(s), int(s + k - 1)) for s, k in zip(starts, lengths)]
    dest = int(sum(lengths))
    src = ranges(pairs, dest)
    colors = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    part = Partition(src.space, {c: [i for i in range(n) if colors[i] == c] for c in range(4)})
    back = preimage(src, image(src, part))
    for c in range(4):
        kept = set(back[c].tolist())
        assert all(i in kept for i in part[c].tolist() if lengths[i] > 0)


def test_partition_by_bounds_examples():
    space = IndexSpace((6,))
    assert partition_by_bounds(space, {0: (0, 2), 1: (3, 5)}).as_sets() == {0: {0, 1, 2},
                                                                            1: {3, 4, 5}}
    blocks = universe_blocks(5, 2)
    assert partition_by_bounds(IndexSpace((5,)), dict(enumerate(blocks))).as_sets() == {
        0: {0, 1, 2}, 1: {3, 4}}
    assert len(partition_by_bounds(space, {})) == 0
    assert partition_by_bounds(space, {0: (3, 2)}).as_sets() == {0: set()}
    with pytest.raises(BoundsError):
        partition_by_bounds(space, {0: (0, 6)})


def test_partition_by_bounds_two_dims_is_row_major_box():
    out = partition_by_bounds(IndexSpace((3, 4)), {0: [(1, 2), (0, 1)]})
    assert out.as_sets() == {0: {4, 5, 8, 9}}


def test_copy_partition():
    part = Partition(IndexSpace((3,)), {0: [0, 1], 1: [2]})
    pos = ranges([(0, 1), (2, 2), (3, 3)], 4)
    assert copy_partition(part, pos).as_sets() == part.as_sets()
    assert copy_partition(part, pos).sizes() == part.sizes()
    with pytest.raises(ShapeError):
        copy_partition(part, IndexSpace((4,)))


def test_replicate_and_intersect():
    space = IndexSpace((4,))
    rep = replicated(space, [0, 1])
    assert rep.as_sets() == {0: {0, 1, 2, 3}, 1: {0, 1, 2, 3}}
    cut = intersect(rep, Partition(space, {0: [1], 1: [2, 3]}))
    assert cut.as_sets() == {0: {1}, 1: {2, 3}}


def test_division_rules():
    assert [tuple(r) for r in universe_blocks(5, 2)] == [(0, 2), (3, 4)]
    assert [tuple(r) for r in universe_blocks(3, 2)] == [(0, 1), (2, 2)]
    assert [len(r) for r in universe_blocks(2, 4)] == [1, 1, 0, 0]
    assert [len(r) for r in position_blocks(7, 2)] == [3, 4]
    assert [len(r) for r in position_blocks(4, 2)] == [2, 2]
    assert [len(r) for r in position_blocks(2, 3)] == [0, 0, 2]
    assert [tuple(r) for r in chunk_blocks(5, 2, 4)] == [(0, 1), (2, 3), (4, 4), (6, 5)]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 200), st.integers(1, 16))
def test_division_rules_tile(extent, pieces):
    for blocks in (universe_blocks(extent, pieces), position_blocks(extent, pieces)):
        covered = [i for r in blocks for i in range(r.lo, r.hi + 1)]
        assert covered == list(range(extent))
    sizes = [len(r) for r in position_blocks(extent, pieces)]
    assert max(sizes) - min(sizes) <= extent % pieces
