import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import csr_matrix, random_tensor, straddle_matrix
from sparsedist.core import Partition, position_blocks, universe_blocks
from sparsedist.errors import BoundsError, PartitionError
from sparsedist.formats import parse_format
from sparsedist.levels import (level_partitioner, nonzero_bundle, replicated_bundle,
                               universe_bundle)
from sparsedist.tensor import SparseTensor


def sets(bundle, li, role):
    return bundle.levels[li][role].as_sets()


def test_dense_universe():
    t = SparseTensor.from_dense(np.ones(6), parse_format("d"))
    lp = level_partitioner(t, 0)
    lp.init_universe_partition()
    lp.create_universe_partition_entry(0, (0, 2))
    lp.create_universe_partition_entry(1, (3, 5))
    up, down = lp.finalize_universe_partition()
    assert up.as_sets() == down.as_sets() == {0: {0, 1, 2}, 1: {3, 4, 5}}


def test_compressed_universe_buckets_coordinates():
    lp = level_partitioner(csr_matrix(), 1)
    lp.init_universe_partition()
    lp.create_universe_partition_entry(0, (0, 1))
    lp.create_universe_partition_entry(1, (2, 2))
    up, down = lp.finalize_universe_partition()
    assert down.as_sets() == {0: {0, 1, 2}, 1: {3}}
    assert up.as_sets() == {0: {0, 1}, 1: {2}}


def test_single_universe_entry():
    b = universe_bundle(csr_matrix(), 1, {0: (0, 2)})
    assert sets(b, 1, "crd") == {0: {0, 1, 2, 3}}
    assert sets(b, 1, "pos") == {0: {0, 1, 2}}


def test_nonzero_split_ignores_values():
    lp = level_partitioner(csr_matrix(), 1)
    lp.init_nonzero_partition()
    lp.create_nonzero_partition_entry(0, (0, 1))
    lp.create_nonzero_partition_entry(1, (2, 3))
    up, down = lp.finalize_nonzero_partition()
    assert down.sizes() == {0: 2, 1: 2}
    assert up.as_sets() == {0: {0}, 1: {1, 2}}


def test_nonzero_division_seven_by_two():
    t = SparseTensor.from_coo((7,), [(k,) for k in range(7)], np.ones(7), parse_format("s"))
    b = nonzero_bundle(t, 0, dict(enumerate(position_blocks(7, 2))))
    assert b.levels[0]["crd"].sizes() == {0: 3, 1: 4}


def test_straddled_row_is_multicolored():
    b = nonzero_bundle(straddle_matrix(), 1, {0: (0, 1), 1: (2, 3)})
    assert sets(b, 1, "pos") == {0: {0}, 1: {0, 1}}
    assert not b.levels[1]["pos"].disjoint
    assert sets(b, 0, "dom") == {0: {0}, 1: {0, 1}}


def test_from_parent_csr():
    b = universe_bundle(csr_matrix(), 0, {0: (0, 1), 1: (2, 2)})
    assert sets(b, 1, "pos") == {0: {0, 1}, 1: {2}}
    assert sets(b, 1, "crd") == {0: {0, 1, 2}, 1: {3}}
    assert b.vals.as_sets() == sets(b, 1, "crd")


def test_from_parent_empty_piece():
    b = universe_bundle(csr_matrix(), 0, {0: (0, 2), 1: (3, 2)})
    assert sets(b, 1, "crd") == {0: {0, 1, 2, 3}, 1: set()}


def test_from_child():
    lp = level_partitioner(csr_matrix(), 1)
    up = lp.partition_from_child(Partition(lp.level.space, {0: [0, 1], 1: [2, 3]}))
    assert up.as_sets() == {0: {0}, 1: {1, 2}}


def test_builder_misuse():
    lp = level_partitioner(csr_matrix(), 1)
    with pytest.raises(PartitionError):
        lp.create_universe_partition_entry(0, (0, 1))
    lp.init_universe_partition()
    lp.create_universe_partition_entry(0, (0, 1))
    with pytest.raises(PartitionError, match="overlap"):
        lp.create_universe_partition_entry(1, (1, 2))
    lp.finalize_universe_partition()
    with pytest.raises(PartitionError):
        lp.finalize_universe_partition()
    nz = level_partitioner(csr_matrix(), 1)
    nz.init_nonzero_partition()
    with pytest.raises(BoundsError):
        nz.create_nonzero_partition_entry(0, (0, 4))


def test_overlap_allowed_when_requested():
    b = universe_bundle(csr_matrix(), 0, {0: (0, 1), 1: (1, 2)}, allow_overlap=True)
    assert sets(b, 0, "dom") == {0: {0, 1}, 1: {1, 2}}


def test_dense_universe_equals_nonzero():
    t = SparseTensor.from_dense(np.arange(12.0).reshape(3, 4), parse_format("dd"))
    assert universe_bundle(t, 0, {0: [(0, 0), (0, 3)], 1: [(1, 2), (0, 3)]}) == \
        nonzero_bundle(t, 0, {0: (0, 3), 1: (4, 11)})


def test_replicated_bundle():
    b = replicated_bundle(csr_matrix(), [0, 1])
    assert b.vals.as_sets() == {0: {0, 1, 2, 3}, 1: {0, 1, 2, 3}}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 6), st.sampled_from(["ds", "ss", "dss", "sss", "sds"]))
def test_round_trip_refines_parent(seed, pieces, fmt_text):
    rng = np.random.default_rng(seed)
    fmt = parse_format(fmt_text)
    dims = tuple(int(d) for d in rng.integers(1, 9, size=fmt.order))
    t = random_tensor(rng, dims, fmt, 0.3)
    if t.levels[0].kind == "dense":
        b = universe_bundle(t, 0, {c: r for c, r in enumerate(universe_blocks(dims[0], pieces))})
        parent = b.levels[0]["dom"]
    else:
        b = nonzero_bundle(t, 0, dict(enumerate(position_blocks(t.levels[0].size, pieces))))
        parent = b.levels[0]["crd"]
    if len(t.levels) > 1:
        lp = level_partitioner(t, 1)
        back = lp.partition_from_child(lp.partition_from_parent(parent))
        child = t.levels[1]
        if child.kind == "dense":
            has_children = np.full(child.parent_size, child.dom.volume > 0)
        else:
            has_children = child.pos.data[:, 0] <= child.pos.data[:, 1]
        for c in parent.colors:
            kept = set(back[c].tolist())
            assert all(i in kept for i in parent[c].tolist() if has_children[i])
    # every stored value lands in some color, and the leaf partitions tile
    assert sorted(np.concatenate([b.vals[c] for c in b.colors]).tolist()) == list(range(t.leaf_size))

