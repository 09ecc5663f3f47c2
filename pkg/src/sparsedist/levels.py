"""Partitioning level functions for dense and compressed levels.

Each level of a tensor gets a :class:`LevelPartitioner`.  The planner calls the
same eight functions on every level and never looks at the storage kind:

* ``init/create_entry/finalize`` for universe partitions (coordinate bounds),
* ``init/create_entry/finalize`` for non-zero partitions (position bounds),
* ``partition_from_parent`` / ``partition_from_child`` to derive the rest of
  the coordinate tree.

``finalize_*`` returns ``(up, down)``: ``up`` partitions the parent level's
positions and ``down`` partitions this level's positions.  The partitions the
level keeps for itself are exposed through :meth:`LevelPartitioner.own`.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .core import (CoordRange, IndexSpace, Partition, box_indices, copy_partition, image,
                   intersect, preimage, replicated)
from .errors import BoundsError, PartitionError
from .formats import DENSE
from .tensor import CompressedLevel, DenseLevel, SparseTensor

_IDLE, _UNIVERSE, _NONZERO, _DONE = "idle", "universe", "nonzero", "done"


def _as_range(bounds) -> CoordRange:
    if isinstance(bounds, CoordRange):
        return bounds
    lo, hi = bounds
    return CoordRange(int(lo), int(hi))


class LevelPartitioner:
    """Shared builder state machine; subclasses supply the storage-specific parts."""

    def __init__(self, tensor: SparseTensor, level_index: int):
        self.tensor = tensor
        self.index = level_index
        self.level = tensor.levels[level_index]
        self._state = _IDLE
        self._entries: dict[int, object] = {}
        self._allow_overlap = False
        self._own: dict[str, Partition] = {}

    @property
    def kind(self) -> str:
        return self.level.kind

    def own(self) -> dict[str, Partition]:
        return dict(self._own)

    # -- universe ---------------------------------------------------------

    def init_universe_partition(self, allow_overlap: bool = False) -> None:
        self._begin(_UNIVERSE, allow_overlap)

    def create_universe_partition_entry(self, color: int, bounds) -> None:
        self._expect(_UNIVERSE)
        box = self._universe_box(bounds)
        self._add(color, box)

    def finalize_universe_partition(self) -> tuple[Partition, Partition]:
        self._expect(_UNIVERSE)
        self._state = _DONE
        return self._finalize_universe(self._entries)

    # -- non-zero ---------------------------------------------------------

    def init_nonzero_partition(self, allow_overlap: bool = False) -> None:
        self._begin(_NONZERO, allow_overlap)

    def create_nonzero_partition_entry(self, color: int, position_bounds) -> None:
        self._expect(_NONZERO)
        r = _as_range(position_bounds)
        if not r.empty and (r.lo < 0 or r.hi >= self.level.size):
            raise BoundsError(f"position bounds {tuple(r)} outside [0, {self.level.size})")
        self._add(color, [(r.lo, r.hi)])

    def finalize_nonzero_partition(self) -> tuple[Partition, Partition]:
        self._expect(_NONZERO)
        self._state = _DONE
        ranges = {c: box[0] for c, box in self._entries.items()}
        return self._finalize_nonzero(ranges)

    # -- derived ----------------------------------------------------------

    def partition_from_parent(self, part: Partition) -> Partition:
        raise NotImplementedError

    def partition_from_child(self, part: Partition) -> Partition:
        raise NotImplementedError

    # -- builder plumbing -------------------------------------------------

    def _begin(self, mode, allow_overlap):
        if self._state != _IDLE:
            raise PartitionError(f"level {self.index} partition already {self._state}")
        self._state = mode
        self._entries = {}
        self._allow_overlap = allow_overlap

    def _expect(self, mode):
        if self._state == _DONE:
            raise PartitionError("partition entry or finalize after finalize")
        if self._state != mode:
            raise PartitionError(f"expected an initialized {mode} partition, state is {self._state}")

    def _add(self, color, box):
        color = int(color)
        if color in self._entries:
            raise PartitionError(f"color {color} already has an entry")
        if not self._allow_overlap and not any(lo > hi for lo, hi in box):
            for other, obox in self._entries.items():
                if any(lo > hi for lo, hi in obox):
                    continue
                if all(lo <= ohi and olo <= hi for (lo, hi), (olo, ohi) in zip(box, obox)):
                    raise PartitionError(f"entries for colors {other} and {color} overlap")
        self._entries[color] = box

    def _universe_box(self, bounds) -> list[tuple[int, int]]:
        raise NotImplementedError


class DensePartitioner(LevelPartitioner):
    level: DenseLevel

    def _universe_box(self, bounds):
        modes = self.level.modes
        if not isinstance(bounds, Mapping):
            if len(modes) == 1:
                bounds = {modes[0]: bounds}
            else:
                bounds = dict(zip(modes, bounds))
        box = []
        for m, ext in zip(modes, self.level.dom.extents):
            r = _as_range(bounds.get(m, (0, ext - 1)))
            if not r.empty and (r.lo < 0 or r.hi >= ext):
                raise BoundsError(f"bounds {tuple(r)} outside mode {m} of extent {ext}")
            box.append((r.lo, r.hi))
        return box

    def _dom_from_boxes(self, boxes) -> Partition:
        space = self.level.space
        lead = [(0, self.level.parent_size - 1)] if self.level.parent_size != 1 else []
        return Partition._trusted(space, {c: box_indices(space, lead + list(b))
                                          for c, b in boxes.items()})

    def _up(self, dom: Partition) -> Partition:
        if self.level.parent_size == 1:
            return dom
        vol = self.level.dom.volume
        return Partition._trusted(self.level.parent_space,
                                  {c: np.unique(s // vol) for c, s in dom.items()})

    def _finalize_universe(self, entries):
        dom = self._dom_from_boxes(entries)
        self._own = {"dom": dom}
        return self._up(dom), dom

    def _finalize_nonzero(self, ranges):
        space = self.level.space
        dom = Partition._trusted(space, {c: np.arange(lo, hi + 1, dtype=np.int64)
                                         for c, (lo, hi) in ranges.items()})
        self._own = {"dom": dom}
        return self._up(dom), dom

    def partition_from_parent(self, part: Partition) -> Partition:
        vol = self.level.dom.volume
        if part.parent.volume != self.level.parent_size:
            part = copy_partition(part, self.level.parent_space)
        local = np.arange(vol, dtype=np.int64)
        dom = Partition._trusted(self.level.space, {
            c: (s[:, None] * vol + local[None, :]).reshape(-1) for c, s in part.items()})
        self._own = {"dom": dom}
        return dom

    def partition_from_child(self, part: Partition) -> Partition:
        dom = copy_partition(part, self.level.space)
        self._own = {"dom": dom}
        return self._up(dom)


class CompressedPartitioner(LevelPartitioner):
    level: CompressedLevel

    def _universe_box(self, bounds):
        if isinstance(bounds, Mapping):
            bounds = bounds.get(self.level.mode, (0, self.level.dim - 1))
        r = _as_range(bounds)
        if not r.empty and (r.lo < 0 or r.hi >= self.level.dim):
            raise BoundsError(f"bounds {tuple(r)} outside dimension of extent {self.level.dim}")
        return [(r.lo, r.hi)]

    def _finish(self, crd: Partition) -> tuple[Partition, Partition]:
        pos = preimage(self.level.pos, crd, self.level.crd.space)
        self._own = {"pos": pos, "crd": crd}
        return pos, crd

    def _finalize_universe(self, entries):
        values = self.level.crd.data
        crd = Partition._trusted(self.level.space, {
            c: np.flatnonzero((values >= lo) & (values <= hi)).astype(np.int64)
            for c, [(lo, hi)] in entries.items()})
        return self._finish(crd)

    def _finalize_nonzero(self, ranges):
        crd = Partition._trusted(self.level.space, {
            c: np.arange(lo, hi + 1, dtype=np.int64) for c, (lo, hi) in ranges.items()})
        return self._finish(crd)

    def partition_from_parent(self, part: Partition) -> Partition:
        pos = copy_partition(part, self.level.pos)
        crd = image(self.level.pos, pos, self.level.crd.space)
        self._own = {"pos": pos, "crd": crd}
        return crd

    def partition_from_child(self, part: Partition) -> Partition:
        crd = copy_partition(part, self.level.space)
        return self._finish(crd)[0]


def level_partitioner(tensor: SparseTensor, level_index: int) -> LevelPartitioner:
    level = tensor.levels[level_index]
    if level.kind == DENSE:
        return DensePartitioner(tensor, level_index)
    return CompressedPartitioner(tensor, level_index)


class TensorPartitionBundle:
    """Per-level partitions of one tensor plus the induced ``vals`` partition.

    ``levels[k]`` maps region roles (``dom`` for dense levels, ``pos``/``crd``
    for compressed ones) to partitions; all partitions share one color set.
    """

    def __init__(self, tensor: SparseTensor, levels: list[dict[str, Partition]], vals: Partition):
        self.tensor = tensor
        self.levels = levels
        self.vals = vals

    @property
    def colors(self) -> list[int]:
        return self.vals.colors

    def regions(self):
        """``(level index or None, role, partition)`` for every partitioned region."""
        for li, roles in enumerate(self.levels):
            for role, part in roles.items():
                yield li, role, part
        yield None, "vals", self.vals

    def intersect(self, other: "TensorPartitionBundle") -> "TensorPartitionBundle":
        levels = [{role: intersect(a[role], b[role]) for role in a}
                  for a, b in zip(self.levels, other.levels)]
        return TensorPartitionBundle(self.tensor, levels, intersect(self.vals, other.vals))

    def restrict_colors(self, keep) -> "TensorPartitionBundle":
        """Empty every color not in ``keep`` (workers that sit idle)."""
        keep = set(keep)

        def cut(p):
            return Partition._trusted(p.parent, {c: (s if c in keep else s[:0])
                                                 for c, s in p.items()})
        return TensorPartitionBundle(self.tensor,
                                     [{r: cut(p) for r, p in lv.items()} for lv in self.levels],
                                     cut(self.vals))

    def __eq__(self, other):
        if not isinstance(other, TensorPartitionBundle):
            return NotImplemented
        return self.levels == other.levels and self.vals == other.vals

    def __hash__(self):
        return id(self)


def _vals_partition(tensor: SparseTensor, leaf_down: Partition) -> Partition:
    return copy_partition(leaf_down, tensor.vals)


def replicated_bundle(tensor: SparseTensor, colors) -> TensorPartitionBundle:
    colors = list(colors)
    levels = []
    for level in tensor.levels:
        if level.kind == DENSE:
            levels.append({"dom": replicated(level.space, colors)})
        else:
            levels.append({"pos": replicated(level.pos.space, colors),
                           "crd": replicated(level.space, colors)})
    return TensorPartitionBundle(tensor, levels, replicated(tensor.vals.space, colors))


def derive_tree(tensor: SparseTensor, start: int, partitioner: LevelPartitioner,
                up: Partition, down: Partition,
                trace: list | None = None) -> TensorPartitionBundle:
    """Partition every level of ``tensor`` from an initial partition of level ``start``.

    Levels above ``start`` use ``partition_from_child``; levels below use
    ``partition_from_parent``.
    """
    own: list[dict[str, Partition] | None] = [None] * len(tensor.levels)
    own[start] = partitioner.own()
    part = up
    for li in range(start - 1, -1, -1):
        lp = level_partitioner(tensor, li)
        part = lp.partition_from_child(part)
        own[li] = lp.own()
        if trace is not None:
            trace.append(("from_child", li))
    part = down
    for li in range(start + 1, len(tensor.levels)):
        lp = level_partitioner(tensor, li)
        part = lp.partition_from_parent(part)
        own[li] = lp.own()
        if trace is not None:
            trace.append(("from_parent", li))
    if tensor.levels:
        leaf = own[-1]
        vals = _vals_partition(tensor, leaf["dom"] if "dom" in leaf else leaf["crd"])
    else:
        vals = replicated(tensor.vals.space, up.colors)
    return TensorPartitionBundle(tensor, own, vals)


def universe_bundle(tensor: SparseTensor, level_index: int, entries: Mapping[int, object],
                    allow_overlap: bool = False) -> TensorPartitionBundle:
    lp = level_partitioner(tensor, level_index)
    lp.init_universe_partition(allow_overlap)
    for color, bounds in entries.items():
        lp.create_universe_partition_entry(color, bounds)
    up, down = lp.finalize_universe_partition()
    return derive_tree(tensor, level_index, lp, up, down)


def nonzero_bundle(tensor: SparseTensor, level_index: int,
                   entries: Mapping[int, object]) -> TensorPartitionBundle:
    lp = level_partitioner(tensor, level_index)
    lp.init_nonzero_partition()
    for color, bounds in entries.items():
        lp.create_nonzero_partition_entry(color, bounds)
    up, down = lp.finalize_nonzero_partition()
    return derive_tree(tensor, level_index, lp, up, down)


def scalar_bundle(tensor: SparseTensor, colors) -> TensorPartitionBundle:
    return TensorPartitionBundle(tensor, [], replicated(IndexSpace((1,)), colors))


def recolor(bundle: TensorPartitionBundle, source_of: Mapping[int, int]) -> TensorPartitionBundle:
    """Relabel colors: new color ``c`` takes the subsets of color ``source_of[c]``."""
    def re(p):
        empty = np.zeros(0, dtype=np.int64)
        return Partition._trusted(p.parent, {c: (p[s] if s in p else empty)
                                             for c, s in source_of.items()})
    return TensorPartitionBundle(bundle.tensor,
                                 [{r: re(p) for r, p in lv.items()} for lv in bundle.levels],
                                 re(bundle.vals))
