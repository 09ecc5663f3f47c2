"""Planning: turn a scheduled statement into an explicit distribution plan.

:func:`plan` is symbolic.  It decides which level functions run on which
tensors and records them as steps, so the plan can be rendered without data.
:func:`bind` evaluates those steps against concrete tensors and produces the
per-color partition bundles the runtime consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import CoordRange, chunk_blocks, position_blocks, universe_blocks
from .errors import ShapeError, ValidationError
from .formats import COMPRESSED, FormatSpec
from .levels import (TensorPartitionBundle, derive_tree, level_partitioner, recolor,
                     replicated_bundle)
from .machine import MachineGrid
from .schedule import (CoordinatePosition, CoordinateValue, Distribute, Divide, Fuse,
                       PosDivide, Reorder, Schedule, ScheduledStatement, classify_iteration,
                       parse_schedule, validate_schedule)
from .tdn import MachineName, TdnStatement, validate_tdn
from .tensor import SparseTensor, group_levels
from .tin import Access, Term, TinStatement


# -- plan steps -------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """One distributed loop and the strip-mine it came from."""

    var: str
    machine_dim: str
    pieces: int
    iteration: object  # CoordinateValue | CoordinatePosition
    origin: str
    originals: tuple[str, ...]
    kind: str
    size: int | None = None


@dataclass(frozen=True)
class CoordBlocks:
    """Bounds from dividing the extent of ``var`` (tensor ``tensor`` mode ``mode``)."""
    dist: int
    var: str
    tensor: str
    mode: int


@dataclass(frozen=True)
class PositionBlocks:
    dist: int
    tensor: str
    level: int


@dataclass(frozen=True)
class Projected:
    dist: int
    source: str
    var: str


@dataclass(frozen=True)
class InitialPartition:
    tensor: str
    level: int
    function: str  # universe | nonzero
    mode: int | None
    bounds: object  # CoordBlocks | PositionBlocks | Projected
    allow_overlap: bool = False


@dataclass(frozen=True)
class DeriveTree:
    tensor: str
    start: int
    nlevels: int
    dist: int


@dataclass(frozen=True)
class ProjectBounds:
    dist: int
    source: str
    var: str
    mode: int


@dataclass(frozen=True)
class Replicate:
    tensor: str


@dataclass(frozen=True)
class IntersectBundles:
    tensor: str
    dists: tuple[int, ...]


@dataclass(frozen=True)
class DistributedLoop:
    var: str
    machine_dim: str
    pieces: int
    tensors: tuple[str, ...]


@dataclass(frozen=True)
class CommunicateStep:
    tensor: str
    var: str


@dataclass(frozen=True)
class LeafKernel:
    loops: tuple[str, ...]
    leaf_order: tuple[str, ...]


@dataclass(frozen=True)
class ReduceCombine:
    output: str
    reason: str


@dataclass
class Plan:
    stmt: TinStatement
    formats: dict[str, FormatSpec]
    graph: ScheduledStatement
    grid: MachineGrid
    distributions: list[Distribution]
    steps: list
    placement: bool = False
    name: str = "kernel"

    @property
    def reduces(self) -> bool:
        return any(isinstance(s, ReduceCombine) for s in self.steps)


# -- planning ----------------------------------------------------------------

def _storage_vars(stmt: TinStatement, tensor: str, fmt: FormatSpec) -> list[str]:
    acc = stmt.access_of(tensor)
    return [acc.vars[m] for m in fmt.mode_order]


def level_index(fmt: FormatSpec, mode: int) -> int:
    """Index of the (merged) level that stores ``mode``."""
    s = fmt.level_of_mode(mode)
    for li, (_, members) in enumerate(group_levels(fmt)):
        if s in members:
            return li
    raise ValueError(mode)


def _distribution(graph: ScheduledStatement, grid: MachineGrid, var: str, mdim: str) -> Distribution:
    info = graph.vars[var]
    origin = info.parents[0]
    parent = graph.vars[origin]
    if parent.kind not in ("original", "fuse"):
        raise ValidationError(f"distributed variable {var} strip-mines {origin}, which is itself "
                              "strip-mined; nested distribution of one variable is unsupported")
    if parent.kind == "fuse" and info.kind in ("divide", "split"):
        raise ValidationError(f"universe division of fused variable {origin} is unsupported")
    return Distribution(var, mdim, grid.extent(mdim), classify_iteration(graph, var), origin,
                        tuple(parent.originals), info.kind, info.size)


def plan(stmt: TinStatement, formats: Mapping[str, FormatSpec], schedule: Schedule | str,
         grid: MachineGrid, placement: bool = False, name: str = "kernel") -> Plan:
    """Build the symbolic plan for a scheduled statement on ``grid``."""
    if isinstance(schedule, str):
        schedule = parse_schedule(schedule)
    formats = dict(formats)
    graph = validate_schedule(stmt, schedule, formats)
    for _, mdim in graph.distributed:
        grid.dim(mdim)
    if len(graph.distributed) > len(grid.names):
        raise ValidationError("more distributed loops than machine grid dimensions")

    dists = [_distribution(graph, grid, v, m) for v, m in graph.distributed]
    inputs = stmt.input_tensors
    steps: list = []
    parts_of: dict[str, list[int]] = {t: [] for t in inputs}

    def universe(t, var, d, bounds, overlap=False):
        acc = stmt.access_of(t)
        mode = acc.vars.index(var)
        li = level_index(formats[t], mode)
        steps.append(InitialPartition(t, li, "universe", mode, bounds, overlap))
        steps.append(DeriveTree(t, li, len(group_levels(formats[t])), d))
        parts_of[t].append(d)

    for d, dist in enumerate(dists):
        if isinstance(dist.iteration, CoordinateValue):
            (var,) = dist.originals
            for t in inputs:
                if var in stmt.access_of(t).vars:
                    mode = stmt.access_of(t).vars.index(var)
                    universe(t, var, d, CoordBlocks(d, var, t, mode))
        else:
            src = dist.iteration.tensor
            fmt = formats[src]
            svars = _storage_vars(stmt, src, fmt)
            last_mode = stmt.access_of(src).vars.index(dist.originals[-1])
            li = level_index(fmt, last_mode)
            steps.append(InitialPartition(src, li, "nonzero", None, PositionBlocks(d, src, li)))
            steps.append(DeriveTree(src, li, len(group_levels(fmt)), d))
            parts_of[src].append(d)
            top = svars[0]
            top_mode = stmt.access_of(src).vars.index(top)
            steps.append(ProjectBounds(d, src, top, top_mode))
            for t in inputs:
                if t != src and top in stmt.access_of(t).vars:
                    universe(t, top, d, Projected(d, src, top), overlap=True)

    for t in inputs:
        if len(parts_of[t]) > 1:
            steps.append(IntersectBundles(t, tuple(parts_of[t])))
        elif not parts_of[t]:
            steps.append(Replicate(t))

    for dist in dists:
        touched = tuple(t for t in inputs if any(dists[d].var == dist.var for d in parts_of[t]))
        steps.append(DistributedLoop(dist.var, dist.machine_dim, dist.pieces, touched))
    if dists:
        default_at = dists[-1].var
        for t in stmt.tensors:
            at = graph.communicate.get(t, default_at)
            steps.append(CommunicateStep(t, at))

    residual = tuple(v for v in graph.loop_order if v not in graph.distributed_vars)
    steps.append(LeafKernel(residual, tuple(graph.leaf_order)))

    lhs = set(stmt.lhs.vars)
    for dist in dists:
        if any(o not in lhs for o in dist.originals):
            steps.append(ReduceCombine(stmt.lhs.tensor, f"reduction variable distributed by {dist.var}"))
            break
        if isinstance(dist.iteration, CoordinatePosition):
            steps.append(ReduceCombine(stmt.lhs.tensor,
                                       f"projected bounds from {dist.var} may overlap"))
            break
    return Plan(stmt, formats, graph, grid, dists, steps, placement, name)


# -- binding -----------------------------------------------------------------

@dataclass
class BoundPlan:
    """A plan evaluated against concrete tensors."""

    plan: Plan
    tensors: dict[str, SparseTensor]
    dims: dict[str, int]
    colors: list[int]
    active: list[int]
    bundles: dict[str, TensorPartitionBundle]
    restrict_level: dict[str, int]
    value_bounds: dict[int, dict[str, tuple[int, int]]]
    output_boxes: dict[int, list[tuple[int, int]]]
    projected: dict[int, dict[int, CoordRange]] = field(default_factory=dict)
    pieces_of: dict[int, dict[int, int]] = field(default_factory=dict)

    @property
    def stmt(self) -> TinStatement:
        return self.plan.stmt


def index_extents(stmt: TinStatement, tensors: Mapping[str, SparseTensor],
                  output_dims: tuple[int, ...] | None = None) -> dict[str, int]:
    dims: dict[str, int] = {}
    accesses = list(stmt.accesses)
    for acc in accesses:
        t = tensors[acc.tensor]
        if t.order != len(acc.vars):
            raise ShapeError(f"{acc} has arity {len(acc.vars)} but {acc.tensor} has order {t.order}")
        for v, n in zip(acc.vars, t.dims):
            if dims.setdefault(v, n) != n:
                raise ShapeError(f"index variable {v} has extents {dims[v]} and {n}")
    if output_dims is not None:
        for v, n in zip(stmt.lhs.vars, output_dims):
            if dims.setdefault(v, n) != n:
                raise ShapeError(f"output extent {n} for {v} disagrees with {dims[v]}")
    return dims


def project_to_universe(bundle: TensorPartitionBundle, source: SparseTensor,
                        mode: int) -> dict[int, CoordRange]:
    """Per-color min/max of ``mode`` coordinates over the color's stored leaves."""
    coords, leaves = source.leaf_coords()
    column = coords[:, mode] if len(coords) else np.zeros(0, dtype=np.int64)
    order = np.argsort(leaves, kind="stable")
    by_leaf = np.full(source.leaf_size, -1, dtype=np.int64)
    by_leaf[leaves[order]] = column[order]
    out = {}
    for c, vals in bundle.vals.items():
        mine = by_leaf[vals]
        mine = mine[mine >= 0]
        out[c] = CoordRange(int(mine.min()), int(mine.max())) if len(mine) else CoordRange(0, -1)
    return out


def _piece_blocks(dist: Distribution, extent: int) -> list[CoordRange]:
    if dist.kind in ("divide", "pos_divide"):
        return (universe_blocks if dist.kind == "divide" else position_blocks)(extent, dist.pieces)
    need = -(-extent // dist.size) if extent else 0
    if need > dist.pieces:
        raise ValidationError(f"split of {dist.origin} by {dist.size} makes {need} pieces but "
                              f"{dist.machine_dim} has only {dist.pieces} workers")
    return chunk_blocks(extent, dist.size, dist.pieces)


def bind(p: Plan, tensors: Mapping[str, SparseTensor],
         output_dims: tuple[int, ...] | None = None) -> BoundPlan:
    """Evaluate the plan's partitioning steps on concrete tensors."""
    stmt = p.stmt
    tensors = {t: tensors[t] for t in stmt.input_tensors}
    for t, x in tensors.items():
        if x.fmt != p.formats[t]:
            raise ValidationError(f"tensor {t} is stored as {x.fmt} but the plan expects "
                                  f"{p.formats[t]}")
    dims = index_extents(stmt, tensors, output_dims)
    grid = p.grid
    points = grid.points()
    colors = list(range(grid.workers))
    used = {grid.dim(d.machine_dim) for d in p.distributions}
    if p.placement:
        active = colors
    else:
        active = [c for c in colors if all(points[c][k] == 0 for k in range(len(grid.names))
                                           if k not in used)]

    piece_of = {d: {c: points[c][grid.dim(dist.machine_dim)] for c in colors}
                for d, dist in enumerate(p.distributions)}
    blocks: dict[int, list[CoordRange]] = {}
    for d, dist in enumerate(p.distributions):
        if isinstance(dist.iteration, CoordinateValue):
            blocks[d] = _piece_blocks(dist, dims[dist.originals[0]])

    per_dist: dict[str, dict[int, TensorPartitionBundle]] = {t: {} for t in tensors}
    projected: dict[int, dict[int, CoordRange]] = {}
    by_piece: dict[int, TensorPartitionBundle] = {}
    restrict: dict[str, int] = {t: -1 for t in tensors}
    pending: InitialPartition | None = None
    for step in p.steps:
        if isinstance(step, InitialPartition):
            pending = step
        elif isinstance(step, DeriveTree):
            init = pending
            tensor = tensors[step.tensor]
            dist = p.distributions[step.dist]
            lp = level_partitioner(tensor, init.level)
            if init.function == "nonzero":
                ranges = _piece_blocks(dist, tensor.levels[init.level].size)
                lp.init_nonzero_partition()
                for piece, r in enumerate(ranges):
                    lp.create_nonzero_partition_entry(piece, r)
                up, down = lp.finalize_nonzero_partition()
            else:
                if isinstance(init.bounds, Projected):
                    ranges = [projected[step.dist][k] for k in range(dist.pieces)]
                else:
                    ranges = blocks[step.dist]
                lp.init_universe_partition(init.allow_overlap)
                for piece, r in enumerate(ranges):
                    lp.create_universe_partition_entry(piece, {init.mode: r})
                up, down = lp.finalize_universe_partition()
            pieces_bundle = derive_tree(tensor, init.level, lp, up, down)
            per_dist[step.tensor][step.dist] = recolor(pieces_bundle, piece_of[step.dist])
            if init.function == "nonzero":
                by_piece[step.dist] = pieces_bundle
            restrict[step.tensor] = max(restrict[step.tensor], init.level)
            pending = None
        elif isinstance(step, ProjectBounds):
            src = by_piece[step.dist]
            projected[step.dist] = project_to_universe(src, tensors[step.source], step.mode)

    bundles: dict[str, TensorPartitionBundle] = {}
    for t, tensor in tensors.items():
        parts = [b for _, b in sorted(per_dist[t].items())]
        if not parts:
            bundle = replicated_bundle(tensor, colors)
        else:
            bundle = parts[0]
            for other in parts[1:]:
                bundle = bundle.intersect(other)
        if len(active) != len(colors):
            bundle = bundle.restrict_colors(active)
        bundles[t] = bundle

    value_bounds: dict[int, dict[str, tuple[int, int]]] = {c: {} for c in colors}
    for d, dist in enumerate(p.distributions):
        if d not in blocks:
            continue
        (var,) = dist.originals
        for c in colors:
            r = blocks[d][piece_of[d][c]]
            lo, hi = value_bounds[c].get(var, (0, dims[var] - 1))
            value_bounds[c][var] = (max(lo, r.lo), min(hi, r.hi))

    out_vars = stmt.lhs.vars
    output_boxes: dict[int, list[tuple[int, int]]] = {}
    for c in colors:
        box = [(0, dims[v] - 1) for v in out_vars]
        for d, dist in enumerate(p.distributions):
            if d in blocks:
                var = dist.originals[0]
                r = blocks[d][piece_of[d][c]]
            else:
                var = next(s.var for s in p.steps if isinstance(s, ProjectBounds) and s.dist == d)
                r = projected[d][piece_of[d][c]]
            if var in out_vars:
                k = out_vars.index(var)
                lo, hi = box[k]
                box[k] = (max(lo, r.lo), min(hi, r.hi))
        if c not in active:
            box = [(0, -1) for _ in out_vars]
        output_boxes[c] = box

    return BoundPlan(p, tensors, dims, colors, active, bundles, restrict, value_bounds,
                     output_boxes, projected, piece_of)


# -- TDN lowering -------------------------------------------------------------

def lower_tdn(tdn: TdnStatement, fmt: FormatSpec, grid: MachineGrid) -> Plan:
    """Lower a distribution statement to a placement plan over an identity statement.

    The statement ``T__out(dims) = T(dims)`` is fused, divided and distributed
    as the TDN names dictate; the plan's bundle for ``T`` is its resident layout.
    """
    validate_tdn(tdn, fmt)
    if len(tdn.machine) != len(grid.names):
        raise ValidationError(f"{tdn} names {len(tdn.machine)} machine dimensions; the grid has "
                              f"{len(grid.names)}")
    t = tdn.tensor
    out = f"{t}__out"
    stmt = TinStatement(Access(out, tdn.dims), (Term((Access(t, tdn.dims),)),))
    storage = [tdn.dims[m] for m in fmt.mode_order]
    directives: list = []
    if storage != list(tdn.dims):
        directives.append(Reorder(tuple(storage)))
    fused_of = {f: group for group, f in tdn.fusions}
    outers: list[str] = []
    for k, dim_name, modes, nonzero in tdn.matches():
        mdim = grid.names[k]
        if len(modes) > 1 and not nonzero:
            raise ValidationError(f"universe partitioning of fused name {dim_name} is unsupported; "
                                  f"use ~{dim_name}")
        var = dim_name
        if dim_name in fused_of:
            group = fused_of[dim_name]
            acc = group[0]
            for n, g in enumerate(group[1:]):
                name = dim_name if n == len(group) - 2 else f"{dim_name}_{n}"
                directives.append(Fuse(acc, g, name))
                acc = name
        outer, inner = f"{var}_o", f"{var}_i"
        if nonzero:
            directives.append(PosDivide(var, outer, inner, mdim, t))
        else:
            directives.append(Divide(var, outer, inner, mdim))
        outers.append(outer)
    if outers:
        # distributed loops first, the rest in their current order
        probe = validate_schedule(stmt, Schedule(tuple(directives)),
                                  {t: fmt, out: fmt})
        order = outers + [v for v in probe.loop_order if v not in outers]
        if order != probe.loop_order:
            directives.append(Reorder(tuple(order)))
        for outer in outers:
            directives.append(Distribute(outer))
    return plan(stmt, {t: fmt, out: fmt}, Schedule(tuple(directives)), grid, placement=True,
                name=f"place_{t}")


def default_tdn(tensor: str, order: int, grid: MachineGrid) -> TdnStatement:
    """Blocked universe distribution of the first mode over the first grid dimension."""
    names = list(grid.names)
    dims = [names[0]] + [f"_m{k}" for k in range(1, order)] if order else []
    return TdnStatement(tensor, tuple(dims), (), tuple(MachineName(n) for n in names))
