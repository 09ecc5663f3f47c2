"""Coordinate-tree storage for sparse tensors.

A tensor is a list of levels in storage order.  Consecutive dense modes share
one multi-dimensional :class:`DenseLevel`; every compressed mode is its own
:class:`CompressedLevel` with a ``pos`` region of inclusive ranges into a
``crd`` region.  Positions of a level are linear: a dense level maps parent
position ``p`` and local point ``r`` to ``p * dom.volume + r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import COORD, RANGE, SCALAR, IndexSpace, Region
from .errors import BoundsError, ShapeError, ValidationError
from .formats import COMPRESSED, DENSE, FormatSpec


@dataclass(frozen=True, eq=False)
class DenseLevel:
    modes: tuple[int, ...]
    dom: IndexSpace
    parent_size: int
    first_storage_mode: int

    kind = DENSE

    @property
    def size(self) -> int:
        return self.parent_size * self.dom.volume

    @property
    def space(self) -> IndexSpace:
        if self.parent_size == 1:
            return self.dom
        return IndexSpace((self.parent_size,) + self.dom.extents)

    @property
    def parent_space(self) -> IndexSpace:
        return IndexSpace((self.parent_size,))


@dataclass(frozen=True, eq=False)
class CompressedLevel:
    mode: int
    dim: int
    pos: Region
    crd: Region
    first_storage_mode: int

    kind = COMPRESSED

    @property
    def modes(self) -> tuple[int, ...]:
        return (self.mode,)

    @property
    def parent_size(self) -> int:
        return self.pos.space.volume

    @property
    def size(self) -> int:
        return self.crd.space.volume

    @property
    def space(self) -> IndexSpace:
        return self.crd.space

    @property
    def parent_space(self) -> IndexSpace:
        return self.pos.space


Level = DenseLevel | CompressedLevel


def group_levels(fmt: FormatSpec) -> list[tuple[str, list[int]]]:
    """Merge consecutive dense storage modes; returns (kind, storage indices) groups."""
    groups: list[tuple[str, list[int]]] = []
    for s, kind in enumerate(fmt.levels):
        if kind == DENSE and groups and groups[-1][0] == DENSE:
            groups[-1][1].append(s)
        else:
            groups.append((kind, [s]))
    return groups


class SparseTensor:
    """Levels plus a scalar ``vals`` region indexed by leaf positions."""

    def __init__(self, dims: Sequence[int], fmt: FormatSpec, levels: Sequence[Level],
                 vals: Region, name: str | None = None, check: bool = True):
        self.dims = tuple(int(d) for d in dims)
        self.fmt = fmt
        self.levels = list(levels)
        self.vals = vals
        self.name = name
        if check:
            self.check()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_coo(cls, dims, coords, values, fmt: FormatSpec, name: str | None = None):
        """Pack a coordinate list; duplicate coordinates are summed."""
        dims = tuple(int(d) for d in dims)
        if len(dims) != fmt.order:
            raise ShapeError(f"format {fmt} has {fmt.order} levels for a tensor of order {len(dims)}")
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, len(dims))
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if len(coords) != len(values):
            raise ShapeError("coordinate and value counts differ")
        if len(coords) and (np.any(coords < 0) or np.any(coords >= np.asarray(dims))):
            raise BoundsError("coordinate outside the declared dimensions")
        order = list(fmt.mode_order)
        sc = coords[:, order]
        if len(sc):
            sc, inverse = np.unique(sc, axis=0, return_inverse=True)
            summed = np.zeros(len(sc))
            np.add.at(summed, inverse.reshape(-1), values)
        else:
            summed = values
        sdims = [dims[m] for m in order]

        levels: list[Level] = []
        parent = np.zeros(len(sc), dtype=np.int64)
        parent_size = 1
        for kind, smodes in group_levels(fmt):
            if kind == DENSE:
                dom = IndexSpace(tuple(sdims[s] for s in smodes))
                local = dom.linearize(sc[:, smodes]) if len(sc) else parent
                parent = parent * dom.volume + local
                levels.append(DenseLevel(tuple(order[s] for s in smodes), dom, parent_size,
                                         smodes[0]))
                parent_size *= dom.volume
            else:
                s = smodes[0]
                crd_col = sc[:, s]
                if len(sc):
                    change = np.ones(len(sc), dtype=bool)
                    change[1:] = (parent[1:] != parent[:-1]) | (crd_col[1:] != crd_col[:-1])
                    node_ids = np.cumsum(change) - 1
                    crd = crd_col[change]
                    node_parent = parent[change]
                else:
                    node_ids = parent
                    crd = np.zeros(0, dtype=np.int64)
                    node_parent = crd
                counts = np.bincount(node_parent, minlength=parent_size)
                starts = np.cumsum(counts) - counts
                pos = np.stack([starts, starts + counts - 1], axis=1)
                crd_space = IndexSpace((len(crd),))
                levels.append(CompressedLevel(
                    order[s], sdims[s],
                    Region(IndexSpace((parent_size,)), RANGE, pos, dest=crd_space),
                    Region(crd_space, COORD, crd), s))
                parent = node_ids.astype(np.int64)
                parent_size = len(crd)
        vals = np.zeros(parent_size)
        vals[parent] = summed
        return cls(dims, fmt, levels, Region(IndexSpace((parent_size,)), SCALAR, vals), name=name)

    @classmethod
    def from_dense(cls, array, fmt: FormatSpec | None = None, name: str | None = None):
        array = np.asarray(array, dtype=np.float64)
        fmt = fmt or FormatSpec.dense(array.ndim)
        if fmt.all_dense:
            coords = np.argwhere(np.ones(array.shape, dtype=bool))
        else:
            coords = np.argwhere(array != 0)
        return cls.from_coo(array.shape, coords, array[tuple(coords.T)], fmt, name=name)

    # -- properties -------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def leaf_size(self) -> int:
        return self.levels[-1].size if self.levels else 1

    def level_of_mode(self, mode: int) -> int:
        for li, level in enumerate(self.levels):
            if mode in level.modes:
                return li
        raise ValueError(f"mode {mode} not stored")

    def with_vals(self, values, name: str | None = None) -> "SparseTensor":
        vals = Region(self.vals.space, SCALAR, np.asarray(values, dtype=np.float64))
        return SparseTensor(self.dims, self.fmt, self.levels, vals, name=name or self.name,
                            check=False)

    def renamed(self, name: str) -> "SparseTensor":
        return SparseTensor(self.dims, self.fmt, self.levels, self.vals, name=name, check=False)

    # -- invariants -------------------------------------------------------

    def check(self) -> None:
        fmt = self.fmt
        if len(self.dims) != fmt.order:
            raise ShapeError("dims and format disagree on tensor order")
        parent_size = 1
        for level in self.levels:
            if level.parent_size != parent_size:
                raise ValidationError("level parent size does not match the level above")
            if isinstance(level, DenseLevel):
                if level.dom.extents != tuple(self.dims[m] for m in level.modes):
                    raise ValidationError("dense dom extents differ from the tensor dimensions")
            else:
                pos = level.pos.data
                crd = level.crd.data
                counts = pos[:, 1] - pos[:, 0] + 1
                if np.any(counts < 0):
                    raise ValidationError("malformed pos range")
                starts = np.cumsum(counts) - counts
                if not np.array_equal(pos[:, 0], starts) or counts.sum() != len(crd):
                    raise ValidationError("pos ranges must tile [0, nnz) in order")
                if len(crd) and (crd.min() < 0 or crd.max() >= level.dim):
                    raise BoundsError("crd value outside the dimension")
                if len(crd) > 1:
                    inc = crd[1:] > crd[:-1]
                    row_start = np.zeros(len(crd), dtype=bool)
                    row_start[starts[counts > 0]] = True
                    if not np.all(inc | row_start[1:]):
                        raise ValidationError("crd values must increase strictly within a segment")
            parent_size = level.size
        if len(self.vals) != parent_size:
            raise ValidationError(f"vals holds {len(self.vals)} values for {parent_size} leaves")

    # -- traversal --------------------------------------------------------

    def leaf_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates (in mode order) and leaf positions, in storage traversal order."""
        positions = np.zeros(1, dtype=np.int64)
        cols: list[np.ndarray] = []
        for level in self.levels:
            if isinstance(level, DenseLevel):
                vol = level.dom.volume
                local = np.tile(np.arange(vol, dtype=np.int64), len(positions))
                parent = np.repeat(positions, vol)
                cols = [np.repeat(c, vol) for c in cols]
                pts = level.dom.unravel(local)
                cols.extend(pts[:, k] for k in range(pts.shape[1]))
                positions = parent * vol + local
            else:
                lo = level.pos.data[positions, 0]
                hi = level.pos.data[positions, 1]
                counts = np.maximum(hi - lo + 1, 0)
                cols = [np.repeat(c, counts) for c in cols]
                offs = np.arange(counts.sum(), dtype=np.int64) - np.repeat(
                    np.cumsum(counts) - counts, counts)
                positions = np.repeat(lo, counts) + offs
                cols.append(level.crd.data[positions])
        storage = np.stack(cols, axis=1) if cols else np.zeros((len(positions), 0), dtype=np.int64)
        coords = np.empty_like(storage)
        for s, m in enumerate(self.fmt.mode_order):
            coords[:, m] = storage[:, s]
        return coords, positions

    def __repr__(self):
        return f"SparseTensor({self.name or '?'}, dims={self.dims}, fmt={self.fmt}, nnz={self.nnz})"


def iterate_leaves(tensor: SparseTensor) -> Iterator[tuple[tuple[int, ...], float]]:
    """Yield ``(coordinate, value)`` for every stored leaf in storage order."""
    coords, positions = tensor.leaf_coords()
    vals = tensor.vals.data
    for row, p in zip(coords.tolist(), positions.tolist()):
        yield tuple(row), float(vals[p])
