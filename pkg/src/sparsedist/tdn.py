"""Tensor distribution notation.

Text form::

    B(x,y) onto M(x)                    rows blocked over a 1-D grid
    c(x) onto M(y)                      no shared name: replicated
    B(x,y) fuse(x,y->f) onto M(~f)      fused non-zero partition

Machine names are positional: the k-th name labels grid dimension k.  A
tensor dimension (or fused name) sharing a name with a machine dimension is
partitioned along it; ``~`` requests a non-zero partition instead of a
universe partition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .formats import COMPRESSED, FormatSpec

_NAME = r"[A-Za-z_]\w*"
_HEAD = re.compile(rf"^\s*({_NAME})\s*\(([^)]*)\)\s*")
_FUSE = re.compile(rf"\s*fuse\s*\(([^)]*?)->\s*({_NAME})\s*\)\s*")
_ONTO = re.compile(rf"\s*onto\s+({_NAME})\s*\(([^)]*)\)\s*$")


@dataclass(frozen=True)
class MachineName:
    name: str
    nonzero: bool = False

    def __str__(self):
        return ("~" if self.nonzero else "") + self.name


@dataclass(frozen=True)
class TdnStatement:
    tensor: str
    dims: tuple[str, ...]
    fusions: tuple[tuple[tuple[str, ...], str], ...]
    machine: tuple[MachineName, ...]
    machine_label: str = "M"

    def __str__(self):
        text = f"{self.tensor}({','.join(self.dims)})"
        for group, fused in self.fusions:
            text += f" fuse({','.join(group)}->{fused})"
        return text + f" onto {self.machine_label}({','.join(str(m) for m in self.machine)})"

    def logical_names(self) -> list[tuple[str, tuple[str, ...]]]:
        """(name, tensor dim names) after fusion, in tensor-dimension order."""
        fused_of = {d: (group, f) for group, f in self.fusions for d in group}
        out = []
        for d in self.dims:
            if d in fused_of:
                group, f = fused_of[d]
                if d == group[0]:
                    out.append((f, group))
            else:
                out.append((d, (d,)))
        return out

    def matches(self) -> list[tuple[int, str, tuple[int, ...], bool]]:
        """(machine dim, logical name, tensor modes, nonzero) for each shared name."""
        modes = {n: tuple(self.dims.index(d) for d in group) for n, group in self.logical_names()}
        out = []
        for k, m in enumerate(self.machine):
            if m.name in modes:
                out.append((k, m.name, modes[m.name], m.nonzero))
        return out


def _names(text: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")] if text.strip() else []
    for p in parts:
        if not re.fullmatch(rf"~?{_NAME}", p):
            raise ParseError(f"bad name {p!r}")
    return parts


def parse_tdn(text: str) -> TdnStatement:
    m = _HEAD.match(text)
    if not m:
        raise ParseError(f"expected 'T(dims) ... onto M(names)', got {text!r}")
    tensor, dims = m.group(1), _names(m.group(2))
    rest = text[m.end():]
    fusions = []
    while True:
        f = _FUSE.match(rest)
        if not f:
            break
        fusions.append((tuple(_names(f.group(1))), f.group(2)))
        rest = rest[f.end():]
    o = _ONTO.match(rest)
    if not o:
        raise ParseError(f"expected 'onto M(...)' in {text!r}")
    machine = []
    for name in _names(o.group(2)):
        machine.append(MachineName(name.lstrip("~"), name.startswith("~")))
    if any(d.startswith("~") for d in dims):
        raise ParseError("'~' marks machine names, not tensor dimensions")
    stmt = TdnStatement(tensor, tuple(dims), tuple(fusions), tuple(machine), o.group(1))
    validate_tdn(stmt)
    return stmt


def validate_tdn(stmt: TdnStatement, fmt: FormatSpec | None = None) -> None:
    """Check name hygiene; with ``fmt``, also check markers against storage."""
    if len(set(stmt.dims)) != len(stmt.dims):
        raise ValidationError(f"duplicate tensor dimension names in {stmt}")
    names = [m.name for m in stmt.machine]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate machine dimension names in {stmt}")
    seen: set[str] = set()
    for group, fused in stmt.fusions:
        if len(group) < 2:
            raise ValidationError("a fusion group needs at least two dimensions")
        for d in group:
            if d not in stmt.dims:
                raise ValidationError(f"fusion references unknown dimension {d}")
            if d in seen:
                raise ValidationError(f"dimension {d} appears in two fusion groups")
            seen.add(d)
        idx = [stmt.dims.index(d) for d in group]
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise ValidationError(f"fused dimensions {group} must be adjacent and in order")
        if fused in stmt.dims:
            raise ValidationError(f"fused name {fused} collides with a tensor dimension")
    logical = dict(stmt.logical_names())
    for m in stmt.machine:
        if m.nonzero and m.name not in logical:
            raise ValidationError(f"non-zero marker on {m.name}, which names no tensor dimension")
    for _, fused in stmt.fusions:
        if fused in names and not stmt.machine[names.index(fused)].nonzero:
            raise ValidationError(f"fused name {fused} must carry a non-zero marker (~{fused})")
    if fmt is None:
        return
    if fmt.order != len(stmt.dims):
        raise ValidationError(f"{stmt} names {len(stmt.dims)} dimensions; format has {fmt.order}")
    for _, name, modes, nonzero in stmt.matches():
        levels = [fmt.level_of_mode(m) for m in modes]
        if nonzero:
            if fmt.levels[levels[-1]] != COMPRESSED:
                raise ValidationError(f"~{name}: no compressed level underlies {name}")
            if levels != list(range(len(levels))):
                raise ValidationError(f"~{name}: non-zero partitions must cover the outermost "
                                      "storage levels in order")
