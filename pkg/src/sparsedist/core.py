"""Index spaces, regions, partitions and the dependent-partitioning operators.

Every index set is stored as a sorted, duplicate-free ``int64`` array of
row-major linear indices into the owning :class:`IndexSpace`.  Partitions are
materialized explicitly; nothing here is symbolic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BoundsError, ShapeError

SCALAR = "scalar"
COORD = "coord"
RANGE = "range"

_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class IndexSpace:
    """A rectangular domain of multi-dimensional indices."""

    extents: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if any(e < 0 for e in ext):
            raise ShapeError(f"negative extent in {ext}")
        object.__setattr__(self, "extents", ext)

    @property
    def ndim(self) -> int:
        return len(self.extents)

    @property
    def volume(self) -> int:
        return int(np.prod(self.extents, dtype=np.int64)) if self.extents else 1

    def all_indices(self) -> np.ndarray:
        return np.arange(self.volume, dtype=np.int64)

    def linearize(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.int64)
        if self.ndim == 0:
            return np.zeros(len(points), dtype=np.int64)
        return np.ravel_multi_index(tuple(points.T), self.extents).astype(np.int64)

    def unravel(self, indices) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if self.ndim == 0:
            return np.zeros((len(indices), 0), dtype=np.int64)
        return np.stack(np.unravel_index(indices, self.extents), axis=1).astype(np.int64)


@dataclass(frozen=True)
class CoordRange:
    """Inclusive ``[lo, hi]`` range; empty iff ``lo > hi``."""

    lo: int
    hi: int

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __iter__(self):
        yield self.lo
        yield self.hi


class Region:
    """A field of values over an index space.

    ``kind`` is one of ``"scalar"`` (float64), ``"coord"`` (int64) or
    ``"range"`` (an ``(n, 2)`` int64 array of inclusive bounds into ``dest``).
    """

    __slots__ = ("space", "kind", "data", "dest")

    def __init__(self, space: IndexSpace, kind: str, data, dest: IndexSpace | None = None):
        if kind == SCALAR:
            arr = np.asarray(data, dtype=np.float64).reshape(-1)
        elif kind == COORD:
            arr = np.asarray(data, dtype=np.int64).reshape(-1)
        elif kind == RANGE:
            arr = np.asarray(data, dtype=np.int64).reshape(-1, 2)
            if dest is None:
                raise ValueError("a range region must name its destination space")
        else:
            raise ValueError(f"unknown region kind {kind!r}")
        if len(arr) != space.volume:
            raise ShapeError(f"region holds {len(arr)} values for a space of {space.volume}")
        if kind == RANGE:
            lo, hi = arr[:, 0], arr[:, 1]
            live = lo <= hi
            if np.any(live & ((lo < 0) | (hi >= dest.volume))):
                raise BoundsError("range value points outside its destination space")
        self.space = space
        self.kind = kind
        self.data = arr
        self.dest = dest

    def __len__(self):
        return self.space.volume

    def __getitem__(self, i):
        if self.kind == RANGE:
            lo, hi = self.data[i]
            return CoordRange(int(lo), int(hi))
        return self.data[i].item()

    def __repr__(self):
        return f"Region({self.kind}, extents={self.space.extents})"


def _as_index_array(values) -> np.ndarray:
    arr = np.asarray(sorted(set(int(v) for v in values)) if not isinstance(values, np.ndarray)
                     else np.unique(values.astype(np.int64)), dtype=np.int64)
    return arr.reshape(-1)


class Partition:
    """A mapping from integer colors to (possibly overlapping) subsets of ``parent``.

    Disjointness is computed from the subsets, never trusted from the caller.
    """

    __slots__ = ("parent", "_subsets", "_disjoint")

    def __init__(self, parent: IndexSpace, subsets: Mapping[int, Iterable[int]]):
        self.parent = parent
        clean: dict[int, np.ndarray] = {}
        for color in sorted(subsets):
            if int(color) < 0:
                raise ValueError(f"colors must be non-negative, got {color}")
            idx = _as_index_array(subsets[color])
            if len(idx) and (idx[0] < 0 or idx[-1] >= parent.volume):
                raise BoundsError(f"color {color} holds indices outside the parent space")
            clean[int(color)] = idx
        self._subsets = clean
        self._disjoint = None

    @classmethod
    def _trusted(cls, parent: IndexSpace, subsets: dict[int, np.ndarray]) -> "Partition":
        # subsets already sorted/unique/in-bounds
        part = cls.__new__(cls)
        part.parent = parent
        part._subsets = dict(sorted(subsets.items()))
        part._disjoint = None
        return part

    @property
    def colors(self) -> list[int]:
        return list(self._subsets)

    def __getitem__(self, color: int) -> np.ndarray:
        return self._subsets[color]

    def __contains__(self, color) -> bool:
        return color in self._subsets

    def __len__(self) -> int:
        return len(self._subsets)

    def items(self):
        return self._subsets.items()

    @property
    def disjoint(self) -> bool:
        if self._disjoint is None:
            total = sum(len(s) for s in self._subsets.values())
            if total == 0:
                self._disjoint = True
            else:
                merged = np.concatenate(list(self._subsets.values()))
                self._disjoint = len(np.unique(merged)) == total
        return self._disjoint

    def union(self) -> np.ndarray:
        if not self._subsets:
            return _EMPTY
        return np.unique(np.concatenate(list(self._subsets.values())))

    def mask(self, color: int) -> np.ndarray:
        m = np.zeros(self.parent.volume, dtype=bool)
        m[self._subsets[color]] = True
        return m

    def as_sets(self) -> dict[int, set[int]]:
        return {c: set(s.tolist()) for c, s in self._subsets.items()}

    def sizes(self) -> dict[int, int]:
        return {c: len(s) for c, s in self._subsets.items()}

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        if self.parent.volume != other.parent.volume or self.colors != other.colors:
            return False
        return all(np.array_equal(self[c], other[c]) for c in self.colors)

    def __hash__(self):
        return id(self)

    def __repr__(self):
        body = ", ".join(f"{c}:{s.tolist()}" for c, s in self._subsets.items())
        return f"Partition({{{body}}})"


def replicated(space: IndexSpace, colors: Iterable[int]) -> Partition:
    full = space.all_indices()
    return Partition._trusted(space, {int(c): full for c in colors})


def intersect(a: Partition, b: Partition) -> Partition:
    """Color-wise intersection of two partitions of the same space."""
    if a.parent.volume != b.parent.volume:
        raise ShapeError("cannot intersect partitions of different spaces")
    colors = sorted(set(a.colors) | set(b.colors))
    return Partition._trusted(
        a.parent,
        {c: np.intersect1d(a[c] if c in a else _EMPTY, b[c] if c in b else _EMPTY)
         for c in colors},
    )


def _expand_ranges(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """All integers covered by the inclusive ranges, sorted and unique."""
    live = lo <= hi
    lo, hi = lo[live], hi[live]
    if len(lo) == 0:
        return _EMPTY
    lengths = hi - lo + 1
    starts = np.repeat(lo - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
    return np.unique(starts + np.arange(lengths.sum(), dtype=np.int64))


def _check_range_region(source: Region):
    if not isinstance(source, Region) or source.kind != RANGE:
        kind = getattr(source, "kind", type(source).__name__)
        raise TypeError(f"image/preimage need a CoordRange-valued region, got {kind}")


def image(source: Region, src_part: Partition, dest: IndexSpace | None = None) -> Partition:
    """Color every destination of a range pointer with its source's colors."""
    _check_range_region(source)
    dest = source.dest if dest is None else dest
    if dest.volume != source.dest.volume:
        raise ShapeError("image destination does not match the region's pointer target")
    if src_part.parent.volume != source.space.volume:
        raise ShapeError("source partition does not partition the source region")
    lo, hi = source.data[:, 0], source.data[:, 1]
    return Partition._trusted(
        dest, {c: _expand_ranges(lo[idx], hi[idx]) for c, idx in src_part.items()}
    )


def preimage(source: Region, dest_part: Partition, dest: IndexSpace | None = None) -> Partition:
    """Color every range pointer with the colors of the destinations it reaches."""
    _check_range_region(source)
    dest = source.dest if dest is None else dest
    if dest.volume != source.dest.volume:
        raise ShapeError("preimage destination does not match the region's pointer target")
    if dest_part.parent.volume != dest.volume:
        raise ShapeError("destination partition does not partition the destination")
    lo, hi = source.data[:, 0], source.data[:, 1]
    live = lo <= hi
    subsets = {}
    for c, d in dest_part.items():
        left = np.searchsorted(d, lo, side="left")
        right = np.searchsorted(d, hi, side="right")
        subsets[c] = np.flatnonzero(live & (right > left)).astype(np.int64)
    return Partition._trusted(source.space, subsets)


def _bounds_per_dim(bounds, ndim) -> list[tuple[int, int]]:
    if isinstance(bounds, CoordRange) or (
        len(bounds) == 2 and all(isinstance(b, (int, np.integer)) for b in bounds)
    ):
        bounds = [tuple(bounds)]
    out = [(int(lo), int(hi)) for lo, hi in bounds]
    if len(out) != ndim:
        raise ShapeError(f"expected bounds for {ndim} dimensions, got {len(out)}")
    return out


def box_indices(space: IndexSpace, bounds: Sequence[tuple[int, int]]) -> np.ndarray:
    """Linear indices of the box ``bounds`` (one inclusive range per dimension)."""
    axes = []
    for (lo, hi), ext in zip(bounds, space.extents):
        if lo > hi:
            return _EMPTY
        if lo < 0 or hi >= ext:
            raise BoundsError(f"bound ({lo}, {hi}) outside extent {ext}")
        axes.append(np.arange(lo, hi + 1, dtype=np.int64))
    if not axes:
        return np.zeros(1, dtype=np.int64)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.ravel_multi_index(tuple(g.reshape(-1) for g in grids), space.extents).astype(np.int64)


def partition_by_bounds(space: IndexSpace, coloring: Mapping[int, object]) -> Partition:
    """Color the box given for each color; a 1-D space accepts a bare range."""
    subsets = {}
    for color, bounds in coloring.items():
        subsets[int(color)] = box_indices(space, _bounds_per_dim(bounds, space.ndim))
    return Partition._trusted(space, subsets)


def copy_partition(part: Partition, target) -> Partition:
    """Reinterpret ``part`` over ``target`` (a Region or IndexSpace) index-for-index.

    Spaces correspond through row-major linearization, so only the volumes
    have to agree.
    """
    space = target.space if isinstance(target, Region) else target
    if space.volume != part.parent.volume:
        raise ShapeError(
            f"cannot copy a partition of {part.parent.extents} onto {space.extents}"
        )
    return Partition._trusted(space, dict(part.items()))


def universe_blocks(extent: int, pieces: int) -> list[CoordRange]:
    """Coordinate blocks of ``ceil(extent / pieces)``, the last clamped to ``extent``."""
    if pieces < 1:
        raise ValueError("pieces must be >= 1")
    size = -(-extent // pieces) if extent else 0
    out = []
    for p in range(pieces):
        lo = p * size
        hi = min((p + 1) * size, extent) - 1
        out.append(CoordRange(lo, hi) if lo <= hi else CoordRange(lo, lo - 1))
    return out


def position_blocks(count: int, pieces: int) -> list[CoordRange]:
    """Position blocks of ``count // pieces``; the last block absorbs the remainder."""
    if pieces < 1:
        raise ValueError("pieces must be >= 1")
    size = count // pieces
    out = []
    for p in range(pieces):
        lo = p * size
        hi = count - 1 if p == pieces - 1 else (p + 1) * size - 1
        out.append(CoordRange(lo, hi))
    return out


def chunk_blocks(extent: int, chunk: int, pieces: int) -> list[CoordRange]:
    """Fixed-size chunks; colors past the last chunk receive empty ranges."""
    if chunk < 1:
        raise ValueError("split size must be >= 1")
    out = []
    for p in range(pieces):
        lo = p * chunk
        hi = min((p + 1) * chunk, extent) - 1
        out.append(CoordRange(lo, hi) if lo <= hi else CoordRange(lo, lo - 1))
    return out
