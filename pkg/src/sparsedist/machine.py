"""Abstract machine grids.

Grid dimensions carry names (``x``, ``y``, ``z``, ... by default).  Workers are
colored by their row-major linear index in the grid.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ParseError, ValidationError

DEFAULT_NAMES = ("x", "y", "z", "w")


@dataclass(frozen=True)
class MachineGrid:
    names: tuple[str, ...]
    extents: tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.extents) or not self.names:
            raise ValidationError("a machine grid needs at least one named dimension")
        if len(set(self.names)) != len(self.names):
            raise ValidationError("machine dimension names must be distinct")
        if any(int(e) < 1 for e in self.extents):
            raise ValidationError("every machine dimension needs at least one worker")
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))

    @classmethod
    def of(cls, *extents: int) -> "MachineGrid":
        if len(extents) > len(DEFAULT_NAMES):
            names = tuple(f"d{k}" for k in range(len(extents)))
        else:
            names = DEFAULT_NAMES[:len(extents)]
        return cls(names, tuple(extents))

    @property
    def workers(self) -> int:
        n = 1
        for e in self.extents:
            n *= e
        return n

    def dim(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown machine dimension {name!r}") from None

    def extent(self, name: str) -> int:
        return self.extents[self.dim(name)]

    def points(self):
        """Grid coordinates of every worker, in color order."""
        return list(itertools.product(*(range(e) for e in self.extents)))

    def __str__(self):
        return ",".join(f"{n}={e}" for n, e in zip(self.names, self.extents))


def parse_grid(text: str) -> MachineGrid:
    """``"4"``, ``"2x2"`` or ``"x=2,y=3"``."""
    text = text.strip()
    try:
        if "=" in text:
            pairs = [p.split("=") for p in text.split(",")]
            return MachineGrid(tuple(n.strip() for n, _ in pairs), tuple(int(e) for _, e in pairs))
        return MachineGrid.of(*(int(e) for e in text.lower().split("x")))
    except ValueError:
        raise ParseError(f"bad machine grid {text!r}") from None
