"""End-to-end acceptance checks, one group per numbered criterion.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``;
either way the session ends with an ``acceptance criterion N: PASS/FAIL`` line per group.
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

from corpus import PIECES, csr_matrix, random_instance
from sparsedist.cli import main as cli_main
from sparsedist.core import IndexSpace, Partition, Region, image, preimage
from sparsedist.errors import ClosureError
from sparsedist.formats import parse_format
from sparsedist.kernels import KERNELS
from sparsedist.machine import MachineGrid
from sparsedist.oracle import dense_eval, densify, pattern, structural_pattern
from sparsedist.runtime import run
from sparsedist.tdn import parse_tdn
from sparsedist.tensor import SparseTensor
from sparsedist.tio import store_tensor

INSTANCES = 50
RTOL = 1e-12
GOLDEN = Path(__file__).parent / "golden"
SPMV = KERNELS["spmv"]


def is_integer_instance(idx):
    return idx % 5 == 0


@pytest.fixture(scope="module")
def corpus():
    rng = np.random.default_rng(20261019)
    cases = []
    for name in sorted(KERNELS):
        for idx in range(INSTANCES):
            tensors = random_instance(name, rng, integer=is_integer_instance(idx))
            expect = dense_eval(KERNELS[name].stmt, {t: densify(x) for t, x in tensors.items()})
            cases.append((name, idx, tensors, expect))
    return cases


def configs(corpus):
    for name, idx, tensors, expect in corpus:
        k = KERNELS[name]
        for sname, strategy in k.strategies().items():
            for pieces in PIECES:
                yield name, idx, sname, strategy, pieces, tensors, expect


def execute_all(corpus, mode):
    results, closure_errors = {}, []
    for name, idx, sname, strategy, pieces, tensors, _ in configs(corpus):
        k = KERNELS[name]
        try:
            results[name, idx, sname, pieces] = run(
                k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(pieces), tensors,
                mode, tdns=k.tdn_statements(strategy))
        except ClosureError as exc:
            closure_errors.append((name, idx, sname, pieces, str(exc)))
    return results, closure_errors


@pytest.fixture(scope="module")
def seq_results(corpus):
    return execute_all(corpus, "seq")[0]


@pytest.fixture(scope="module")
def instrumented(corpus):
    return execute_all(corpus, "instrumented")


# -- 1: equivalence with the dense oracle -------------------------------------

@pytest.mark.criterion(1)
def test_outputs_match_oracle(corpus, seq_results):
    checked = 0
    for name, idx, sname, _, pieces, _, expect in configs(corpus):
        got = densify(seq_results[name, idx, sname, pieces].output)
        np.testing.assert_allclose(got, expect, rtol=RTOL, atol=0,
                                   err_msg=f"{name} #{idx} {sname} pieces={pieces}")
        if is_integer_instance(idx):
            assert np.array_equal(got, expect), f"{name} #{idx} {sname} pieces={pieces}"
        checked += 1
    assert checked == len(seq_results)


# -- 2: image and preimage against a brute-force fold ------------------------

def brute_image(ranges, coloring, dest_size):
    out = {c: set() for c in coloring}
    for c, srcs in coloring.items():
        for s in srcs:
            lo, hi = ranges[s]
            out[c].update(range(lo, hi + 1))
    return out


def brute_preimage(ranges, coloring):
    owners = {}
    for c, ds in coloring.items():
        for d in ds:
            owners.setdefault(d, set()).add(c)
    out = {c: set() for c in coloring}
    for s, (lo, hi) in enumerate(ranges):
        for d in range(lo, hi + 1):
            for c in owners.get(d, ()):
                out[c].add(s)
    return out


def random_ranges(rng, n_src, n_dest):
    lo = rng.integers(0, max(n_dest, 1), size=n_src)
    width = rng.integers(-1, 4, size=n_src)
    hi = np.minimum(lo + width, n_dest - 1)
    return np.stack([lo, hi], axis=1) if n_dest else np.tile([0, -1], (n_src, 1))


def random_coloring(rng, size, colors):
    return {c: np.flatnonzero(rng.random(size) < rng.uniform(0, 0.5)) for c in range(colors)}


@pytest.mark.criterion(2)
def test_image_preimage_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n_src, n_dest = int(rng.integers(1, 2000)), int(rng.integers(0, 10_000))
        colors = int(rng.integers(1, 65))
        ranges = random_ranges(rng, n_src, n_dest)
        src_space, dest_space = IndexSpace((n_src,)), IndexSpace((n_dest,))
        region = Region(src_space, "range", ranges, dest=dest_space)
        ranges_list = ranges.tolist()

        src_col = random_coloring(rng, n_src, colors)
        got = image(region, Partition(src_space, src_col)).as_sets()
        assert got == brute_image(ranges_list, {c: v.tolist() for c, v in src_col.items()}, n_dest)

        dest_col = random_coloring(rng, n_dest, colors)
        got = preimage(region, Partition(dest_space, dest_col)).as_sets()
        assert got == brute_preimage(ranges_list, {c: v.tolist() for c, v in dest_col.items()})


# -- 3: every access stays inside the worker's partition ---------------------

@pytest.mark.criterion(3)
def test_no_closure_violations(seq_results, instrumented):
    results, errors = instrumented
    assert errors == []
    for key, result in results.items():
        assert result.output.vals.data.tobytes() == seq_results[key].output.vals.data.tobytes()


# -- 4: position splits balance work ----------------------------------------

@pytest.mark.criterion(4)
def test_nonzero_work_balance(corpus, seq_results):
    for name, idx, sname, _, pieces, tensors, _ in configs(corpus):
        if sname != "nonzero":
            continue
        stmt = KERNELS[name].stmt
        split = next(a for a in stmt.accesses if a.tensor == "B")
        extents = {v: tensors[a.tensor].dims[a.vars.index(v)] for a in stmt.accesses
                   if a.tensor in tensors for v in a.vars}
        rest = int(np.prod([extents[v] for v in stmt.index_vars if v not in split.vars]))
        work = [w.work for w in seq_results[name, idx, sname, pieces].stats.per_worker]
        bound = (tensors["B"].nnz % pieces) * rest
        assert max(work) - min(work) <= bound, f"{name} #{idx} pieces={pieces}: {work}"


@pytest.mark.criterion(4)
def test_nonzero_work_hand_example():
    result = run(SPMV.stmt, SPMV.format_specs(), SPMV.nonzero.schedule, MachineGrid.of(2),
                 spmv_inputs())
    assert [w.work for w in result.stats.per_worker] == [2, 2]


# -- 5: communication accounting --------------------------------------------

def spmv_inputs():
    c = SparseTensor.from_dense(np.ones(3), parse_format("d"), name="c")
    return {"B": csr_matrix(), "c": c}


def spmv_bytes(strategy, tdns):
    result = run(SPMV.stmt, SPMV.format_specs(), strategy.schedule, MachineGrid.of(2),
                 spmv_inputs(), tdns={t: parse_tdn(x) for t, x in tdns.items()})
    return [w.bytes_by_tensor for w in result.stats.per_worker]


@pytest.mark.criterion(5)
@pytest.mark.parametrize("strategy,tdns,expect", [
    ("row", SPMV.row.tdns, [{"B": 0, "a": 0, "c": 0}] * 2),
    # B matches; row 1 of a is written by worker 1 but placed on worker 0
    ("nonzero", SPMV.nonzero.tdns, [{"B": 0, "a": 0, "c": 0}, {"B": 0, "a": 8, "c": 0}]),
    ("row", SPMV.nonzero.tdns, [{"B": 32, "a": 0, "c": 0}, {"B": 0, "a": 0, "c": 0}]),
    ("nonzero", SPMV.row.tdns, [{"B": 0, "a": 0, "c": 0}, {"B": 32, "a": 8, "c": 0}]),
    ("row", {**SPMV.row.tdns, "c": "c(x) onto M(x)"},
     [{"B": 0, "a": 0, "c": 8}, {"B": 0, "a": 0, "c": 16}]),
])
def test_communication_bytes(strategy, tdns, expect):
    assert spmv_bytes(SPMV.strategies()[strategy], tdns) == expect


# -- 6: generated pseudo-code -------------------------------------------------

@pytest.mark.criterion(6)
def test_plan_golden(capsys):
    code = cli_main(["plan", "--expr", "a(i) = B(i,j) * c(j)", "--format", "a=d",
                     "--format", "B=ds", "--format", "c=d", "--schedule", SPMV.row.schedule,
                     "--pieces", "2", "--name", "spmv"])
    text = capsys.readouterr().out
    assert code == 0
    assert text == (GOLDEN / "spmv_row_plan.txt").read_text()
    labels = [line.strip() for line in text.splitlines() if line.strip().startswith("// (")]
    assert labels == ["// (1) initial partitions", "// (2) coordinate trees",
                      "// (3) distributed loops", "// (4) leaf kernel"]
    assert "pos[i].lo" in text and "pos[i].hi" in text


# -- 7: output assembly -------------------------------------------------------

@pytest.mark.criterion(7)
def test_spttv_reuses_input_pattern(corpus, seq_results):
    for name, idx, sname, _, pieces, tensors, _ in configs(corpus):
        if name != "spttv":
            continue
        result = seq_results[name, idx, sname, pieces]
        assert result.assembly.mode == "reuse"
        np.testing.assert_array_equal(pattern(result.output), pattern(tensors["B"]).any(axis=2))
        for la, lb in zip(result.output.levels, tensors["B"].levels):
            if la.kind == "compressed":
                assert np.array_equal(la.pos.data, lb.pos.data)
                assert np.array_equal(la.crd.data, lb.crd.data)


@pytest.mark.criterion(7)
def test_spadd3_two_phase_pattern(corpus, seq_results):
    stmt = KERNELS["spadd3"].stmt
    for name, idx, sname, _, pieces, tensors, _ in configs(corpus):
        if name != "spadd3":
            continue
        result = seq_results[name, idx, sname, pieces]
        expect = structural_pattern(stmt, {t: pattern(x) for t, x in tensors.items()})
        np.testing.assert_array_equal(pattern(result.output), expect)
        assert result.assembly.mode == "two_phase"
        assert result.assembly.phase1_nnz == result.assembly.nnz == int(expect.sum())


# -- 8: determinism -------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("mode", ["seq", "par", "instrumented"])
def test_runs_are_bit_identical(corpus, mode):
    for name, idx, sname, strategy, pieces, tensors, _ in configs(corpus):
        if idx >= 5:
            continue
        k = KERNELS[name]
        a, b = (run(k.stmt, k.format_specs(), strategy.schedule, MachineGrid.of(pieces), tensors,
                    mode, tdns=k.tdn_statements(strategy)) for _ in range(2))
        assert a.output.vals.data.tobytes() == b.output.vals.data.tobytes()
        for la, lb in zip(a.output.levels, b.output.levels):
            if la.kind == "compressed":
                assert la.pos.data.tobytes() == lb.pos.data.tobytes()
                assert la.crd.data.tobytes() == lb.crd.data.tobytes()
        assert a.stats.to_json() == b.stats.to_json()


@pytest.mark.criterion(8)
@pytest.mark.parametrize("command", ["run", "plan", "partition", "oracle"])
def test_cli_is_bit_identical(capsys, tmp_path, command):
    store_tensor(csr_matrix(), str(tmp_path / "B.tns"))
    (tmp_path / "c.tns").write_text("1 1.0\n2 1.0\n3 1.0\n")
    argv = [command, "--expr", "a(i) = B(i,j) * c(j)", "--format", "a=d", "--format", "B=ds",
            "--format", "c=d", "--pieces", "3"]
    if command != "oracle":
        argv += ["--schedule", SPMV.nonzero.schedule]
    if command != "plan":
        argv += ["--input", f"B={tmp_path / 'B.tns'}", "--input", f"c={tmp_path / 'c.tns'}"]
    outputs = []
    for rep in range(2):
        extra = []
        if command in ("run", "oracle"):
            extra = ["--output", str(tmp_path / f"out{rep}.tns")]
        if command == "run":
            extra += ["--stats", str(tmp_path / f"stats{rep}.json")]
        assert cli_main(argv + extra) == 0
        files = sorted(p.read_bytes() for p in tmp_path.glob(f"*{rep}.*"))
        outputs.append((capsys.readouterr().out, files))
    assert outputs[0] == outputs[1]
    if command == "run":
        json.loads((tmp_path / "stats0.json").read_text())


def main():
    return pytest.main([__file__, "-q", "-p", "no:cacheprovider"])


if __name__ == "__main__":
    sys.exit(main())
