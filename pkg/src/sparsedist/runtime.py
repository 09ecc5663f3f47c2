"""Simulated distributed execution of a bound plan.

Every worker (one per grid color) receives snapshots of the sub-regions its
partition bundles name; data outside them is poisoned (NaN values, empty pos
ranges, negative coordinates) so a plan that under-partitions produces visibly
wrong results.  In instrumented mode every read is also checked against the
worker's membership masks and the first stray access raises
:class:`~sparsedist.errors.ClosureError`.

The leaf kernel is interpreted breadth-first: a *frontier* holds one row per
partially bound iteration point, and each index variable expands the frontier
by the union over terms of the intersection of that term's compressed
iterators.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .core import COORD, RANGE, SCALAR, IndexSpace, Region, universe_blocks
from .errors import AssemblyError, ClosureError, ValidationError
from .formats import COMPRESSED, DENSE, FormatSpec
from .levels import TensorPartitionBundle
from .machine import MachineGrid
from .planner import BoundPlan, bind, default_tdn, lower_tdn, plan as make_plan
from .tdn import TdnStatement
from .tensor import CompressedLevel, DenseLevel, SparseTensor, group_levels
from .tin import TinStatement

log = logging.getLogger(__name__)

BYTES = {"dom": 0, "pos": 16, "crd": 8, "vals": 8}
MODES = ("seq", "par", "instrumented")


# -- statistics --------------------------------------------------------------

@dataclass
class WorkerStats:
    bytes_by_tensor: dict[str, int] = field(default_factory=dict)
    work: int = 0


@dataclass
class Stats:
    per_worker: list[WorkerStats]
    combines: int = 0

    @property
    def workers(self) -> int:
        return len(self.per_worker)

    @property
    def imbalance(self) -> float:
        work = [w.work for w in self.per_worker]
        mean = sum(work) / len(work) if work else 0.0
        return float(max(work) / mean) if mean else 1.0

    def bytes_for(self, tensor: str) -> int:
        return sum(w.bytes_by_tensor.get(tensor, 0) for w in self.per_worker)

    def to_dict(self) -> dict:
        return {
            "workers": self.workers,
            "per_worker": [{"bytes_by_tensor": dict(sorted(w.bytes_by_tensor.items())),
                            "work": w.work} for w in self.per_worker],
            "imbalance": self.imbalance,
            "combines": self.combines,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class AssemblyReport:
    mode: str  # dense | reuse | two_phase
    phase1_nnz: int | None
    nnz: int
    source: str | None = None


@dataclass
class ExecutionResult:
    output: SparseTensor
    stats: Stats
    assembly: AssemblyReport


# -- worker views ------------------------------------------------------------

class TensorView:
    """One worker's snapshot of one tensor plus its membership masks."""

    def __init__(self, name: str, tensor: SparseTensor, bundle: TensorPartitionBundle,
                 color: int, restrict: int):
        self.name = name
        self.tensor = tensor
        self.color = color
        self.restrict = restrict
        self.masks: dict[tuple[int | None, str], np.ndarray] = {}
        for li, role, part in bundle.regions():
            self.masks[(li, role)] = part.mask(color)
        self.pos: list[np.ndarray | None] = []
        self.crd: list[np.ndarray | None] = []
        for li, level in enumerate(tensor.levels):
            if isinstance(level, CompressedLevel):
                pos = level.pos.data.copy()
                bad = ~self.masks[(li, "pos")]
                pos[bad, 0], pos[bad, 1] = 0, -1
                crd = level.crd.data.copy()
                crd[~self.masks[(li, "crd")]] = -1
                self.pos.append(pos)
                self.crd.append(crd)
            else:
                self.pos.append(None)
                self.crd.append(None)
        self.vals = tensor.vals.data.copy()
        self.vals[~self.masks[(None, "vals")]] = np.nan


class _Guard:
    def __init__(self, color: int, instrumented: bool):
        self.color = color
        self.instrumented = instrumented

    def admit(self, view: TensorView, li: int | None, role: str, idx: np.ndarray,
              random_access: bool = False) -> np.ndarray | None:
        """Filter mask for restricted levels; a closure check everywhere else."""
        ok = view.masks[(li, role)][idx]
        if not random_access and li is not None and li <= view.restrict:
            return ok
        if self.instrumented and not ok.all():
            bad = int(idx[np.flatnonzero(~ok)[0]])
            region = role if li is None else f"level {li} {role}"
            raise ClosureError(view.name, region, bad, self.color)
        return None


# -- leaf kernel -------------------------------------------------------------

@dataclass
class _Shape:
    """Static facts about the statement used by every worker."""

    vars: list[str]
    terms: list[list[str]]
    term_of: dict[str, int]
    sparse: set[str]
    events: dict[str, list[tuple[str, int, str]]]
    storage_vars: dict[str, list[str]]


def _shape(stmt: TinStatement, formats: Mapping[str, FormatSpec], leaf_order) -> _Shape:
    terms = [[f.tensor for f in term.factors] for term in stmt.terms]
    term_of = {t: k for k, ts in enumerate(terms) for t in ts}
    sparse = {t for t in stmt.input_tensors if not formats[t].all_dense}
    events: dict[str, list[tuple[str, int, str]]] = {v: [] for v in leaf_order}
    svars = {}
    for t in stmt.input_tensors:
        fmt = formats[t]
        sv = [stmt.access_of(t).vars[m] for m in fmt.mode_order]
        svars[t] = sv
        if t not in sparse:
            continue
        for li, (kind, members) in enumerate(group_levels(fmt)):
            last = sv[members[-1]]
            events[last].append((t, li, "iter" if kind == COMPRESSED else "dense"))
    return _Shape(list(leaf_order), terms, term_of, sparse, events, svars)


def _expand_ranges(rows, lo, hi):
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    r = np.repeat(rows, counts)
    offs = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    return r, np.repeat(lo, counts) + offs


def run_leaf(bp: BoundPlan, shape: _Shape, color: int, views: Mapping[str, TensorView],
             instrumented: bool):
    """Run the leaf kernel for one worker: (output linear indices, values, work)."""
    stmt = bp.stmt
    guard = _Guard(color, instrumented)
    dims = bp.dims
    bounds = bp.value_bounds.get(color, {})
    nterms = len(shape.terms)
    coords: dict[str, np.ndarray] = {}
    pos = {t: np.zeros(1, dtype=np.int64) for t in shape.sparse}
    active = [np.ones(1, dtype=bool) for _ in range(nterms)]
    n = 1

    for v in shape.vars:
        N = dims[v]
        lo_v, hi_v = bounds.get(v, (0, N - 1))
        results = []
        for ti in range(nterms):
            rows = np.flatnonzero(active[ti])
            evs = [(t, li, k) for t, li, k in shape.events[v] if shape.term_of[t] == ti]
            iters = [(t, li) for t, li, k in evs if k == "iter"]
            newpos: dict[str, np.ndarray] = {}
            if iters:
                r = c = None
                for t, li in iters:
                    view = views[t]
                    parent = pos[t][rows]
                    keep = guard.admit(view, li, "pos", parent)
                    rr = rows if keep is None else rows[keep]
                    parent = parent if keep is None else parent[keep]
                    rng = view.pos[li][parent]
                    r2, p2 = _expand_ranges(rr, rng[:, 0], rng[:, 1])
                    keep = guard.admit(view, li, "crd", p2)
                    if keep is not None:
                        r2, p2 = r2[keep], p2[keep]
                    c2 = view.crd[li][p2]
                    live = c2 >= 0
                    r2, p2, c2 = r2[live], p2[live], c2[live]
                    if r is None:
                        r, c, newpos[t] = r2, c2, p2
                    else:
                        _, i1, i2 = np.intersect1d(r * N + c, r2 * N + c2, assume_unique=True,
                                                   return_indices=True)
                        r, c = r[i1], c[i1]
                        newpos = {k: a[i1] for k, a in newpos.items()}
                        newpos[t] = p2[i2]
            else:
                width = max(hi_v - lo_v + 1, 0)
                r = np.repeat(rows, width)
                c = np.tile(np.arange(lo_v, lo_v + width, dtype=np.int64), len(rows))
            inside = (c >= lo_v) & (c <= hi_v)
            if not inside.all():
                r, c = r[inside], c[inside]
                newpos = {k: a[inside] for k, a in newpos.items()}
            for t, li, kind in evs:
                if kind != "dense":
                    continue
                view = views[t]
                level = view.tensor.levels[li]
                sv = shape.storage_vars[t]
                cols = []
                for s in range(level.first_storage_mode, level.first_storage_mode + len(level.modes)):
                    cols.append(c if sv[s] == v else coords[sv[s]][r])
                local = np.ravel_multi_index(tuple(cols), level.dom.extents) if len(r) else r
                p = pos[t][r] * level.dom.volume + local
                keep = guard.admit(view, li, "dom", p)
                if keep is not None:
                    r, c, p = r[keep], c[keep], p[keep]
                    newpos = {k: a[keep] for k, a in newpos.items()}
                newpos[t] = p
            results.append((r * N + c, newpos))

        keys = np.unique(np.concatenate([k for k, _ in results])) if results else np.zeros(0, np.int64)
        parent_row = keys // N if N else keys
        m = len(keys)
        coords = {u: a[parent_row] for u, a in coords.items()}
        coords[v] = keys % N if N else keys
        pos = {t: a[parent_row] for t, a in pos.items()}
        new_active = []
        for key, newpos in results:
            idx = np.searchsorted(keys, key)
            flag = np.zeros(m, dtype=bool)
            flag[idx] = True
            new_active.append(flag)
            for t, p in newpos.items():
                pos[t][idx] = p
        active = new_active
        n = m

    total = np.zeros(n)
    for ti, term in enumerate(shape.terms):
        rows = np.flatnonzero(active[ti])
        prod = np.ones(len(rows))
        for t in term:
            view = views[t]
            if t in shape.sparse:
                p = pos[t][rows]
            else:
                fmt = view.tensor.fmt
                sv = shape.storage_vars[t]
                if sv:
                    extents = tuple(view.tensor.dims[m] for m in fmt.mode_order)
                    p = np.ravel_multi_index(tuple(coords[u][rows] for u in sv), extents) \
                        if len(rows) else rows
                    guard.admit(view, 0, "dom", p, random_access=True)
                else:
                    p = np.zeros(len(rows), dtype=np.int64)
            guard.admit(view, None, "vals", p)
            prod = prod * view.vals[p]
        total[rows] += prod

    out_vars = stmt.lhs.vars
    if out_vars:
        out_coords = tuple(coords[u] for u in out_vars)
        out_dims = tuple(dims[u] for u in out_vars)
        lin = np.ravel_multi_index(out_coords, out_dims) if n else np.zeros(0, np.int64)
        if instrumented and n:
            box = bp.output_boxes[color]
            for k, (lo, hi) in enumerate(box):
                bad = (out_coords[k] < lo) | (out_coords[k] > hi)
                if bad.any():
                    raise ClosureError(stmt.lhs.tensor, "output", int(lin[np.flatnonzero(bad)[0]]),
                                       color)
    else:
        lin = np.zeros(n, dtype=np.int64)
    uniq, inv = np.unique(lin, return_inverse=True)
    values = np.bincount(inv.reshape(-1), weights=total, minlength=len(uniq))
    return uniq.astype(np.int64), values, n


# -- assembly ----------------------------------------------------------------

def assembly_plan(stmt: TinStatement, formats: Mapping[str, FormatSpec]):
    """``("dense", None)``, ``("reuse", source)`` or ``("two_phase", None)``."""
    out = stmt.lhs.tensor
    fmt = formats[out]
    if fmt.all_dense:
        return "dense", None
    if len(stmt.terms) != 1:
        return "two_phase", None
    factors = [f.tensor for f in stmt.terms[0].factors]
    sparse = [t for t in factors if not formats[t].all_dense]
    if len(sparse) != 1:
        return "two_phase", None
    src = sparse[0]
    sfmt = formats[src]
    k = fmt.order
    svars = [stmt.access_of(src).vars[m] for m in sfmt.mode_order]
    ovars = [stmt.lhs.vars[m] for m in fmt.mode_order]
    if svars[:k] != ovars or sfmt.levels[:k] != fmt.levels:
        return "two_phase", None
    groups = group_levels(sfmt)
    if any(min(g) < k <= max(g) for _, g in groups):
        return "two_phase", None
    return "reuse", src


def _reuse_structure(stmt: TinStatement, fmt: FormatSpec, src: SparseTensor, src_name: str,
                     dims: tuple[int, ...]) -> SparseTensor:
    k = fmt.order
    svars = [stmt.access_of(src_name).vars[m] for m in src.fmt.mode_order]
    out_mode = {s: stmt.lhs.vars.index(svars[s]) for s in range(k)}
    levels = []
    for level in src.levels:
        if level.first_storage_mode >= k:
            break
        if isinstance(level, DenseLevel):
            levels.append(DenseLevel(tuple(out_mode[level.first_storage_mode + j]
                                           for j in range(len(level.modes))),
                                     level.dom, level.parent_size, level.first_storage_mode))
        else:
            levels.append(CompressedLevel(out_mode[level.first_storage_mode], level.dim,
                                          level.pos, level.crd, level.first_storage_mode))
    size = levels[-1].size if levels else 1
    vals = Region(IndexSpace((size,)), SCALAR, np.zeros(size))
    return SparseTensor(dims, fmt, levels, vals, name=stmt.lhs.tensor)


def two_phase_assemble(dims: tuple[int, ...], fmt: FormatSpec, lin: np.ndarray,
                       values: np.ndarray, name: str | None = None) -> tuple[SparseTensor, int]:
    """Symbolic count pass, exact allocation, then a fill pass that never resizes."""
    coords = np.stack(np.unravel_index(lin, dims), axis=1) if len(lin) else \
        np.zeros((0, len(dims)), dtype=np.int64)
    order = list(fmt.mode_order)
    sc = coords[:, order]
    perm = np.lexsort(sc.T[::-1]) if len(sc) else np.zeros(0, dtype=np.int64)
    sc, values = sc[perm], values[perm]
    sdims = [dims[m] for m in order]

    # phase 1: per-parent counts at every level
    plan_levels = []
    parent = np.zeros(len(sc), dtype=np.int64)
    parent_size = 1
    for kind, smodes in group_levels(fmt):
        if kind == DENSE:
            dom = IndexSpace(tuple(sdims[s] for s in smodes))
            local = dom.linearize(sc[:, smodes]) if len(sc) else parent
            plan_levels.append((kind, smodes, dom, parent_size, None))
            parent = parent * dom.volume + local
            parent_size *= dom.volume
        else:
            s = smodes[0]
            col = sc[:, s]
            new = np.ones(len(sc), dtype=bool)
            new[1:] = (parent[1:] != parent[:-1]) | (col[1:] != col[:-1])
            counts = np.bincount(parent[new], minlength=parent_size)
            plan_levels.append((kind, smodes, None, parent_size, (counts, new, parent, col)))
            parent = np.cumsum(new) - 1
            parent_size = int(counts.sum())
    phase1_nnz = parent_size

    # phase 2: allocate exactly and fill with per-parent cursors
    levels = []
    for kind, smodes, dom, psize, extra in plan_levels:
        if kind == DENSE:
            levels.append(DenseLevel(tuple(order[s] for s in smodes), dom, psize, smodes[0]))
            continue
        counts, new, par, col = extra
        starts = np.cumsum(counts) - counts
        crd = np.full(int(counts.sum()), -1, dtype=np.int64)
        cursor = starts.copy()
        targets = np.empty(int(new.sum()), dtype=np.int64)
        owners = par[new]
        rank = np.arange(len(owners)) - np.searchsorted(owners, owners, side="left")
        targets[:] = cursor[owners] + rank
        if len(targets) and np.any(targets >= starts[owners] + counts[owners]):
            raise AssemblyError("fill pass wrote past the symbolic count")
        crd[targets] = col[new]
        pos = np.stack([starts, starts + counts - 1], axis=1)
        space = IndexSpace((len(crd),))
        levels.append(CompressedLevel(order[smodes[0]], sdims[smodes[0]],
                                      Region(IndexSpace((psize,)), RANGE, pos, dest=space),
                                      Region(space, COORD, crd), smodes[0]))
    vals = np.zeros(phase1_nnz)
    if len(parent) and (parent.max() >= phase1_nnz):
        raise AssemblyError("value index past the symbolic count")
    vals[parent] = values
    out = SparseTensor(dims, fmt, levels, Region(IndexSpace((phase1_nnz,)), SCALAR, vals),
                       name=name)
    return out, phase1_nnz


def _leaf_position_lookup(tensor: SparseTensor):
    coords, leaves = tensor.leaf_coords()
    if tensor.order:
        lin = np.ravel_multi_index(tuple(coords.T), tensor.dims) if len(coords) else coords[:, 0]
    else:
        lin = np.zeros(len(leaves), dtype=np.int64)
    order = np.argsort(lin, kind="stable")
    return lin[order], leaves[order]


def _place(lookup, lin: np.ndarray) -> np.ndarray:
    keys, leaves = lookup
    idx = np.searchsorted(keys, lin)
    idx_c = np.minimum(idx, max(len(keys) - 1, 0))
    if len(lin) and (len(keys) == 0 or np.any(keys[idx_c] != lin)):
        raise AssemblyError("a computed entry falls outside the reused output pattern")
    return leaves[idx_c]


def output_template(stmt: TinStatement, formats: Mapping[str, FormatSpec],
                    tensors: Mapping[str, SparseTensor], dims: Mapping[str, int]):
    """The output's storage before values are known (None for two-phase outputs)."""
    out_dims = tuple(dims[v] for v in stmt.lhs.vars)
    mode, src = assembly_plan(stmt, formats)
    fmt = formats[stmt.lhs.tensor]
    if mode == "dense":
        return SparseTensor.from_dense(np.zeros(out_dims), fmt, name=stmt.lhs.tensor)
    if mode == "reuse":
        return _reuse_structure(stmt, fmt, tensors[src], src, out_dims)
    return None


# -- communication -----------------------------------------------------------

def resident_bundles(stmt: TinStatement, formats: Mapping[str, FormatSpec],
                     tensors: Mapping[str, SparseTensor], grid: MachineGrid,
                     tdns: Mapping[str, TdnStatement] | None = None) -> dict[str, TensorPartitionBundle]:
    """Lower each input's TDN (default: blocked first mode) to its resident bundle."""
    tdns = dict(tdns or {})
    out = {}
    for t in stmt.input_tensors:
        tdn = tdns.get(t) or default_tdn(t, tensors[t].order, grid)
        placement = lower_tdn(replace(tdn, tensor=t), formats[t], grid)
        out[t] = bind(placement, {t: tensors[t]}).bundles[t]
    return out


def output_residency(stmt: TinStatement, formats: Mapping[str, FormatSpec], template,
                     dims: Mapping[str, int], grid: MachineGrid, tdn: TdnStatement | None):
    """Per-color resident output: a vals mask (stored outputs) or a coordinate box."""
    name = stmt.lhs.tensor
    fmt = formats[name]
    order = len(stmt.lhs.vars)
    tdn = tdn or default_tdn(name, order, grid)
    if template is not None:
        placement = lower_tdn(replace(tdn, tensor=name), fmt, grid)
        bundle = bind(placement, {name: template}).bundles[name]
        return "mask", {c: bundle.vals.mask(c) for c in bundle.colors}
    points = grid.points()
    boxes = {}
    for c in range(grid.workers):
        box = [(0, dims[v] - 1) for v in stmt.lhs.vars]
        for k, _, modes, nonzero in tdn.matches():
            if nonzero:
                raise ValidationError(f"non-zero distribution of {name}, whose pattern is only "
                                      "known after assembly, is unsupported")
            (m,) = modes
            r = universe_blocks(box[m][1] + 1, grid.extents[k])[points[c][k]]
            box[m] = (r.lo, r.hi)
        boxes[c] = box
    return "box", boxes


def communicate(bp: BoundPlan, resident: Mapping[str, TensorPartitionBundle],
                color: int) -> dict[str, int]:
    """Bytes color ``color`` must receive so its sub-regions are local."""
    charged = {}
    for t, bundle in bp.bundles.items():
        res = resident[t]
        total = 0
        res_regions = {(li, role): part for li, role, part in res.regions()}
        for li, role, part in bundle.regions():
            need = part[color] if color in part else np.zeros(0, np.int64)
            have_part = res_regions[(li, role)]
            have = have_part[color] if color in have_part else np.zeros(0, np.int64)
            missing = np.setdiff1d(need, have, assume_unique=True)
            total += len(missing) * BYTES[role]
        charged[t] = int(total)
    return charged


# -- execution ---------------------------------------------------------------

def execute(bp: BoundPlan, mode: str = "seq",
            resident: Mapping[str, TensorPartitionBundle] | None = None,
            tdns: Mapping[str, TdnStatement] | None = None) -> ExecutionResult:
    """Run a bound plan on the simulated grid and assemble the output."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    p = bp.plan
    stmt = bp.stmt
    grid = p.grid
    if resident is None:
        resident = resident_bundles(stmt, p.formats, bp.tensors, grid, tdns)
    if any(v == "parallelize" for v in p.graph.parallelize.values()):
        log.debug("parallelize annotations are recorded but not honored")
    shape = _shape(stmt, p.formats, p.graph.leaf_order)
    instrumented = mode == "instrumented"

    def worker(color: int):
        if color not in bp.active:
            return color, np.zeros(0, np.int64), np.zeros(0), 0, {t: 0 for t in bp.bundles}
        views = {t: TensorView(t, bp.tensors[t], bp.bundles[t], color, bp.restrict_level[t])
                 for t in bp.tensors}
        charged = communicate(bp, resident, color)
        lin, vals, work = run_leaf(bp, shape, color, views, instrumented)
        return color, lin, vals, work, charged

    if mode == "par" and len(bp.colors) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(bp.colors))) as pool:
            parts = list(pool.map(worker, bp.colors))
    else:
        parts = [worker(c) for c in bp.colors]

    per_worker = [WorkerStats(dict(charged), work) for _, _, _, work, charged in parts]

    # combine in ascending color order
    all_lin = np.concatenate([lin for _, lin, _, _, _ in parts]) if parts else np.zeros(0, np.int64)
    all_val = np.concatenate([v for _, _, v, _, _ in parts]) if parts else np.zeros(0)
    uniq, inv, counts = np.unique(all_lin, return_inverse=True, return_counts=True)
    combined = np.bincount(inv.reshape(-1), weights=all_val, minlength=len(uniq))
    combines = int(np.sum(counts > 1))

    out_name = stmt.lhs.tensor
    out_fmt = p.formats[out_name]
    out_dims = tuple(bp.dims[v] for v in stmt.lhs.vars)
    amode, src = assembly_plan(stmt, p.formats)
    template = output_template(stmt, p.formats, bp.tensors, bp.dims)
    if amode == "two_phase":
        output, phase1 = two_phase_assemble(out_dims, out_fmt, uniq, combined, out_name)
        report = AssemblyReport(amode, phase1, output.nnz)
    else:
        lookup = _leaf_position_lookup(template)
        vals = np.zeros(template.leaf_size)
        vals[_place(lookup, uniq)] = combined
        output = template.with_vals(vals, name=out_name)
        report = AssemblyReport(amode, None, output.nnz, src)

    kind, owned = output_residency(stmt, p.formats, template, bp.dims, grid,
                                   (tdns or {}).get(out_name))
    for color, lin, _, _, _ in parts:
        if not len(lin):
            per_worker[color].bytes_by_tensor[out_name] = 0
            continue
        if kind == "mask":
            leaves = _place(lookup, lin)
            remote = int(np.sum(~owned[color][leaves]))
        else:
            coords = np.unravel_index(lin, out_dims) if out_dims else ()
            inside = np.ones(len(lin), dtype=bool)
            for k, (lo, hi) in enumerate(owned[color]):
                inside &= (coords[k] >= lo) & (coords[k] <= hi)
            remote = int(np.sum(~inside))
        per_worker[color].bytes_by_tensor[out_name] = remote * BYTES["vals"]

    return ExecutionResult(output, Stats(per_worker, combines), report)


def run(stmt: TinStatement, formats: Mapping[str, FormatSpec], schedule, grid: MachineGrid,
        tensors: Mapping[str, SparseTensor], mode: str = "seq",
        tdns: Mapping[str, TdnStatement] | None = None) -> ExecutionResult:
    """Plan, bind and execute in one call."""
    p = make_plan(stmt, formats, schedule, grid)
    bp = bind(p, tensors)
    return execute(bp, mode, tdns=tdns)
