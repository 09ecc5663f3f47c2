import json

import numpy as np
import pytest

from corpus import csr_matrix, random_instance, straddle_matrix
from sparsedist.core import Partition
from sparsedist.errors import ClosureError, ShapeError, ValidationError
from sparsedist.formats import parse_format
from sparsedist.kernels import KERNELS
from sparsedist.levels import TensorPartitionBundle
from sparsedist.machine import MachineGrid
from sparsedist.oracle import dense_eval, densify, pattern, structural_pattern
from sparsedist.planner import bind, plan
from sparsedist.runtime import BYTES, MODES, execute, run
from sparsedist.tdn import parse_tdn
from sparsedist.tensor import SparseTensor
from sparsedist.tin import parse_tin

SPMV = KERNELS["spmv"]


def ones(n):
    return SparseTensor.from_dense(np.ones(n), parse_format("d"), name="c")


def spmv(schedule, pieces=2, B=None, mode="seq", tdns=None):
    B = csr_matrix() if B is None else B
    tdns = {t: parse_tdn(x) for t, x in (tdns or {}).items()}
    return run(SPMV.stmt, SPMV.format_specs(), schedule, MachineGrid.of(pieces),
               {"B": B, "c": ones(B.dims[1])}, mode, tdns=tdns)


def bytes_of(result):
    return [w.bytes_by_tensor for w in result.stats.per_worker]


@pytest.mark.parametrize("mode", MODES)
def test_row_spmv_csr(mode):
    result = spmv(SPMV.row.schedule, mode=mode)
    np.testing.assert_array_equal(densify(result.output), [3.0, 3.0, 4.0])
    assert [w.work for w in result.stats.per_worker] == [3, 1]


def test_pieces_do_not_change_values():
    one = densify(spmv(SPMV.row.schedule, pieces=1).output)
    four = densify(spmv(SPMV.row.schedule, pieces=4).output)
    assert one.tobytes() == four.tobytes()


def test_sparse_intersection():
    stmt = parse_tin("a(i) = b(i) * c(i)")
    fmts = {"a": parse_format("d"), "b": parse_format("s"), "c": parse_format("s")}
    b = SparseTensor.from_coo((6,), [[0], [2], [5]], [1.0, 2.0, 3.0], fmts["b"])
    c = SparseTensor.from_coo((6,), [[2], [3], [5]], [10.0, 20.0, 30.0], fmts["c"])
    result = run(stmt, fmts, "", MachineGrid.of(1), {"b": b, "c": c})
    np.testing.assert_array_equal(densify(result.output), [0, 0, 20, 0, 0, 90])
    assert result.stats.per_worker[0].work == 2


def test_sparse_three_way_union():
    stmt = parse_tin("a(i) = b(i) + c(i) + d(i)")
    fmts = {t: parse_format("s") for t in "abcd"}
    vecs = {"b": [0], "c": [1], "d": [0, 2]}
    tensors = {t: SparseTensor.from_coo((4,), [[k] for k in ks], np.ones(len(ks)), fmts[t])
               for t, ks in vecs.items()}
    result = run(stmt, fmts, "", MachineGrid.of(1), tensors)
    assert result.output.levels[0].crd.data.tolist() == [0, 1, 2]
    assert result.output.vals.data.tolist() == [2.0, 1.0, 1.0]
    assert result.assembly.mode == "two_phase"
    assert result.assembly.phase1_nnz == result.assembly.nnz == 3


def test_spadd3_shifted_copies():
    k = KERNELS["spadd3"]
    base = np.eye(5)
    arrays = {"B": base, "C": np.roll(base, 1, axis=1), "D": np.roll(base, 2, axis=1)}
    tensors = {t: SparseTensor.from_dense(a, parse_format("ds"), name=t) for t, a in arrays.items()}
    result = run(k.stmt, k.format_specs(), k.row.schedule, MachineGrid.of(2), tensors)
    np.testing.assert_array_equal(pattern(result.output),
                                  structural_pattern(k.stmt, {t: a != 0 for t, a in arrays.items()}))
    np.testing.assert_array_equal(densify(result.output), sum(arrays.values()))


def test_sddmm_keeps_b_pattern_even_for_zero_products():
    k = KERNELS["sddmm"]
    B = csr_matrix(fmt="ds")
    C = SparseTensor.from_dense(np.zeros((3, 2)), parse_format("dd"))
    D = SparseTensor.from_dense(np.ones((2, 3)), parse_format("dd"))
    result = run(k.stmt, k.format_specs(), k.row.schedule, MachineGrid.of(2),
                 {"B": B, "C": C, "D": D})
    assert result.assembly.mode == "reuse"
    np.testing.assert_array_equal(pattern(result.output), pattern(B))
    assert result.output.vals.data.tolist() == [0.0] * 4


def test_spttv_reuses_b_pattern():
    k = KERNELS["spttv"]
    rng = np.random.default_rng(3)
    tensors = random_instance("spttv", rng)
    for strategy in k.strategies().values():
        result = run(k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(3), tensors)
        assert result.assembly.mode == "reuse" and result.assembly.source == "B"
        np.testing.assert_array_equal(pattern(result.output), pattern(tensors["B"]).any(axis=2))


def test_matched_distribution_charges_nothing():
    result = spmv(SPMV.row.schedule, tdns=SPMV.row.tdns)
    assert bytes_of(result) == [{"B": 0, "a": 0, "c": 0}] * 2


def test_row_schedule_over_nonzero_placement():
    result = spmv(SPMV.row.schedule, tdns=SPMV.nonzero.tdns)
    # worker 0 lacks pos[1], crd[2] and vals[2] of its rows {0, 1}
    assert bytes_of(result) == [{"B": BYTES["pos"] + BYTES["crd"] + BYTES["vals"], "a": 0, "c": 0},
                                {"B": 0, "a": 0, "c": 0}]


def test_nonzero_schedule_over_row_placement():
    result = spmv(SPMV.nonzero.schedule, tdns=SPMV.row.tdns)
    assert bytes_of(result) == [{"B": 0, "a": 0, "c": 0}, {"B": 32, "a": 8, "c": 0}]


def test_replicated_compute_over_blocked_placement():
    result = spmv(SPMV.row.schedule, tdns={**SPMV.row.tdns, "c": "c(x) onto M(x)"})
    # c blocks {0,1} and {2}: each worker fetches the block it lacks
    assert [b["c"] for b in bytes_of(result)] == [8, 16]


def test_mismatch_never_cheaper():
    rng = np.random.default_rng(11)
    for _ in range(5):
        tensors = random_instance("spmv", rng)
        fmts = SPMV.format_specs()
        for pieces in (2, 3):
            grid = MachineGrid.of(pieces)
            for strategy, other in ((SPMV.row, SPMV.nonzero), (SPMV.nonzero, SPMV.row)):
                matched = run(SPMV.stmt, fmts, strategy.schedule, grid, tensors,
                              tdns=SPMV.tdn_statements(strategy))
                mismatched = run(SPMV.stmt, fmts, strategy.schedule, grid, tensors,
                                 tdns=SPMV.tdn_statements(other))
                assert matched.stats.bytes_for("B") <= mismatched.stats.bytes_for("B")


def test_straddled_row_combines():
    B = straddle_matrix()
    result = spmv(SPMV.nonzero.schedule, B=B)
    np.testing.assert_array_equal(densify(result.output), [6.0, 4.0])
    assert result.stats.combines == 1
    assert [w.work for w in result.stats.per_worker] == [2, 2]


def test_disjoint_rows_do_not_combine():
    assert spmv(SPMV.row.schedule).stats.combines == 0


def test_untouched_output_is_zero():
    B = SparseTensor.from_coo((3, 3), [(0, 0)], [5.0], parse_format("ds"))
    np.testing.assert_array_equal(densify(spmv(SPMV.row.schedule, pieces=3, B=B).output),
                                  [5.0, 0.0, 0.0])


def test_instrumented_reports_closure_violation():
    bp = bind(plan(SPMV.stmt, SPMV.format_specs(), SPMV.row.schedule, MachineGrid.of(2)),
              {"B": csr_matrix(), "c": ones(3)})
    good = bp.bundles["B"]
    crd = good.levels[1]["crd"]
    cut = Partition(crd.parent, {0: [0, 1], 1: [3]})
    bp.bundles["B"] = TensorPartitionBundle(good.tensor, [good.levels[0], {**good.levels[1],
                                                                           "crd": cut}], good.vals)
    with pytest.raises(ClosureError) as info:
        execute(bp, "instrumented")
    err = info.value
    assert (err.tensor, err.index, err.color) == ("B", 2, 0)
    assert "crd" in str(err.region)


def test_stats_json_schema():
    stats = json.loads(spmv(SPMV.nonzero.schedule).stats.to_json())
    assert set(stats) == {"workers", "per_worker", "imbalance", "combines"}
    assert stats["workers"] == 2
    assert set(stats["per_worker"][0]) == {"bytes_by_tensor", "work"}
    assert stats["imbalance"] == 1.0


def test_nonzero_placement_of_assembled_output_rejected():
    k = KERNELS["spadd3"]
    tensors = {t: csr_matrix(fmt="ds") for t in "BCD"}
    with pytest.raises(ValidationError, match="non-zero"):
        run(k.stmt, k.format_specs(), k.row.schedule, MachineGrid.of(2), tensors,
            tdns={"A": parse_tdn("A(x,y) fuse(x,y->f) onto M(~f)")})


def test_errors():
    with pytest.raises(ValidationError):
        spmv(SPMV.row.schedule, mode="turbo")
    with pytest.raises(ShapeError):
        run(SPMV.stmt, SPMV.format_specs(), "", MachineGrid.of(1),
            {"B": csr_matrix(), "c": ones(4)})


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_kernels_match_oracle(name):
    k = KERNELS[name]
    rng = np.random.default_rng(5)
    tensors = random_instance(name, rng)
    expect = dense_eval(k.stmt, {t: densify(x) for t, x in tensors.items()})
    for strategy in k.strategies().values():
        for mode in MODES:
            result = run(k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(3), tensors,
                         mode, tdns=k.tdn_statements(strategy))
            np.testing.assert_allclose(densify(result.output), expect, rtol=1e-12, atol=0)


def test_parallel_mode_is_identical():
    rng = np.random.default_rng(9)
    for name, k in KERNELS.items():
        tensors = random_instance(name, rng)
        for strategy in k.strategies().values():
            seq = run(k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(4), tensors, "seq")
            par = run(k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(4), tensors, "par")
            assert seq.output.vals.data.tobytes() == par.output.vals.data.tobytes()
            assert seq.stats.to_json() == par.stats.to_json()


def test_split_distribution():
    result = spmv("split(i,io,ii,2); distribute(io,x)", pieces=2)
    np.testing.assert_array_equal(densify(result.output), [3.0, 3.0, 4.0])
    with pytest.raises(ValidationError, match="pieces"):
        spmv("split(i,io,ii,1); distribute(io,x)", pieces=2)
