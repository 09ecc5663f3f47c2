"""Scheduling directives and the derived index-variable graph.

Directives are written ``name(args)`` and separated by semicolons::

    divide(i,io,ii,x); distribute(io); communicate({a,B,c},io); parallelize(ii,cpu)
    fuse(i,j,f); pos_divide(f,fo,fi,x,B); distribute(fo)

``divide`` takes its piece count from a machine dimension; ``split`` takes a
fixed inner size.  The ``pos_`` variants strip-mine the stored non-zeros of
the named tensor instead of the coordinate range.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from .errors import ParseError, ValidationError
from .formats import COMPRESSED, FormatSpec
from .tin import TinStatement


@dataclass(frozen=True)
class Divide:
    var: str
    outer: str
    inner: str
    machine_dim: str

    def __str__(self):
        return f"divide({self.var},{self.outer},{self.inner},{self.machine_dim})"


@dataclass(frozen=True)
class Split:
    var: str
    outer: str
    inner: str
    size: int

    def __str__(self):
        return f"split({self.var},{self.outer},{self.inner},{self.size})"


@dataclass(frozen=True)
class PosDivide:
    var: str
    outer: str
    inner: str
    machine_dim: str
    tensor: str

    def __str__(self):
        return f"pos_divide({self.var},{self.outer},{self.inner},{self.machine_dim},{self.tensor})"


@dataclass(frozen=True)
class PosSplit:
    var: str
    outer: str
    inner: str
    size: int
    tensor: str

    def __str__(self):
        return f"pos_split({self.var},{self.outer},{self.inner},{self.size},{self.tensor})"


@dataclass(frozen=True)
class Fuse:
    outer: str
    inner: str
    fused: str

    def __str__(self):
        return f"fuse({self.outer},{self.inner},{self.fused})"


@dataclass(frozen=True)
class Reorder:
    vars: tuple[str, ...]

    def __str__(self):
        return f"reorder({','.join(self.vars)})"


@dataclass(frozen=True)
class Distribute:
    var: str
    machine_dim: str | None = None

    def __str__(self):
        if self.machine_dim is None:
            return f"distribute({self.var})"
        return f"distribute({self.var},{self.machine_dim})"


@dataclass(frozen=True)
class Communicate:
    tensors: tuple[str, ...]
    var: str

    def __str__(self):
        return f"communicate({{{','.join(self.tensors)}}},{self.var})"


@dataclass(frozen=True)
class Parallelize:
    var: str
    annotation: str = "cpu"

    def __str__(self):
        return f"parallelize({self.var},{self.annotation})"


STRIP_MINES = (Divide, Split, PosDivide, PosSplit)


@dataclass(frozen=True)
class Schedule:
    directives: tuple = ()

    def __str__(self):
        return "; ".join(str(d) for d in self.directives)

    def __iter__(self):
        return iter(self.directives)

    def then(self, *directives) -> "Schedule":
        return Schedule(self.directives + tuple(directives))


_DIRECTIVE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def _args(text: str) -> list[str]:
    return [a.strip() for a in text.split(",")] if text.strip() else []


def _int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {text!r}") from None


def parse_directive(text: str):
    m = _DIRECTIVE.match(text)
    if not m:
        raise ParseError(f"cannot parse directive {text!r}")
    name, body = m.group(1), m.group(2)
    if name == "communicate":
        braced = re.match(r"^\s*\{([^}]*)\}\s*,\s*(\w+)\s*$", body)
        if braced:
            return Communicate(tuple(_args(braced.group(1))), braced.group(2))
        args = _args(body)
        if len(args) < 2:
            raise ParseError("communicate needs tensors and a variable")
        return Communicate(tuple(args[:-1]), args[-1])
    args = _args(body)
    for a in args:
        if not re.fullmatch(r"\w+", a):
            raise ParseError(f"bad argument {a!r} in {text!r}")
    arity = {"divide": 4, "split": 4, "pos_divide": 5, "pos_split": 5, "fuse": 3}
    if name in arity and len(args) != arity[name]:
        raise ParseError(f"{name} takes {arity[name]} arguments, got {len(args)}")
    if name == "divide":
        return Divide(*args)
    if name == "split":
        return Split(args[0], args[1], args[2], _int(args[3], "split size"))
    if name == "pos_divide":
        return PosDivide(*args)
    if name == "pos_split":
        return PosSplit(args[0], args[1], args[2], _int(args[3], "split size"), args[4])
    if name == "fuse":
        return Fuse(*args)
    if name == "reorder":
        return Reorder(tuple(args))
    if name == "distribute" and len(args) in (1, 2):
        return Distribute(*args)
    if name == "parallelize" and len(args) in (1, 2):
        return Parallelize(*args)
    raise ParseError(f"unknown directive or bad arguments: {text.strip()!r}")


def parse_schedule(text: str) -> Schedule:
    parts = [p for p in text.split(";") if p.strip()]
    return Schedule(tuple(parse_directive(p) for p in parts))


@dataclass(frozen=True)
class CoordinateValue:
    def __str__(self):
        return "coordinate-value"


@dataclass(frozen=True)
class CoordinatePosition:
    tensor: str

    def __str__(self):
        return f"coordinate-position({self.tensor})"


@dataclass
class VarInfo:
    name: str
    kind: str  # original | divide | split | pos_divide | pos_split | fuse
    parents: tuple[str, ...] = ()
    originals: tuple[str, ...] = ()
    role: str | None = None  # outer | inner for strip-mined variables
    machine_dim: str | None = None
    size: int | None = None
    tensor: str | None = None


@dataclass
class ScheduledStatement:
    """The result of validating a schedule: loop order plus derivation graph."""

    stmt: TinStatement
    schedule: Schedule
    vars: dict[str, VarInfo]
    loop_order: list[str]
    distributed: list[tuple[str, str]]
    communicate: dict[str, str] = field(default_factory=dict)
    parallelize: dict[str, str] = field(default_factory=dict)
    leaf_order: list[str] = field(default_factory=list)
    loop_tensors: dict[str, list[tuple[str, int]]] = field(default_factory=dict)

    def strip_mine_of(self, var: str) -> VarInfo | None:
        info = self.vars[var]
        if info.kind in ("divide", "split", "pos_divide", "pos_split"):
            return info
        return None

    def position_tensors(self, var: str) -> set[str]:
        out: set[str] = set()
        stack = [var]
        while stack:
            info = self.vars[stack.pop()]
            if info.kind in ("pos_divide", "pos_split"):
                out.add(info.tensor)
            stack.extend(info.parents)
        return out

    @property
    def distributed_vars(self) -> list[str]:
        return [v for v, _ in self.distributed]


def default_loop_order(stmt: TinStatement) -> list[str]:
    return stmt.index_vars


def _storage_vars(stmt: TinStatement, tensor: str, fmt: FormatSpec) -> list[str]:
    acc = stmt.access_of(tensor)
    return [acc.vars[m] for m in fmt.mode_order]


def validate_schedule(stmt: TinStatement, schedule: Schedule,
                      formats: Mapping[str, FormatSpec]) -> ScheduledStatement:
    """Apply the directives, check them, and return the derived-variable graph."""
    for name in stmt.tensors:
        if name not in formats:
            raise ValidationError(f"no format for tensor {name}")
        if formats[name].order != len(stmt.access_of(name).vars):
            raise ValidationError(f"format of {name} has {formats[name].order} levels but "
                                  f"{stmt.access_of(name)} has {len(stmt.access_of(name).vars)}")

    vars_: dict[str, VarInfo] = {v: VarInfo(v, "original", originals=(v,))
                                 for v in stmt.index_vars}
    order = default_loop_order(stmt)
    distributed: list[tuple[str, str]] = []
    communicate: dict[str, str] = {}
    parallelize: dict[str, str] = {}

    def need(var):
        if var not in vars_:
            raise ValidationError(f"unknown index variable {var}")
        if var not in order:
            raise ValidationError(f"{var} is no longer a loop (it was transformed)")

    def fresh(*names):
        for n in names:
            if n in vars_ or n in stmt.tensors:
                raise ValidationError(f"derived variable {n} already exists (cyclic derivation)")
        if len(set(names)) != len(names):
            raise ValidationError(f"derived variables {names} must be distinct")

    for d in schedule:
        if isinstance(d, STRIP_MINES):
            need(d.var)
            fresh(d.outer, d.inner)
            parent = vars_[d.var]
            kind = {Divide: "divide", Split: "split", PosDivide: "pos_divide",
                    PosSplit: "pos_split"}[type(d)]
            if kind in ("divide", "split") and parent.kind == "fuse":
                raise ValidationError(f"universe {kind} of fused variable {d.var} is unsupported; "
                                      "use the pos_ variant")
            if kind in ("split", "pos_split") and d.size < 1:
                raise ValidationError("split size must be positive")
            for role, name in (("outer", d.outer), ("inner", d.inner)):
                vars_[name] = VarInfo(name, kind, (d.var,), parent.originals, role,
                                      getattr(d, "machine_dim", None), getattr(d, "size", None),
                                      getattr(d, "tensor", None))
            k = order.index(d.var)
            order[k:k + 1] = [d.outer, d.inner]
        elif isinstance(d, Fuse):
            need(d.outer)
            need(d.inner)
            fresh(d.fused)
            k = order.index(d.outer)
            if k + 1 >= len(order) or order[k + 1] != d.inner:
                raise ValidationError(f"fuse({d.outer},{d.inner}) needs {d.inner} to be the loop "
                                      f"directly inside {d.outer}")
            vars_[d.fused] = VarInfo(d.fused, "fuse", (d.outer, d.inner),
                                     vars_[d.outer].originals + vars_[d.inner].originals)
            order[k:k + 2] = [d.fused]
        elif isinstance(d, Reorder):
            for v in d.vars:
                need(v)
            if len(set(d.vars)) != len(d.vars):
                raise ValidationError("reorder lists a variable twice")
            slots = sorted(order.index(v) for v in d.vars)
            for slot, v in zip(slots, d.vars):
                order[slot] = v
        elif isinstance(d, Distribute):
            need(d.var)
            info = vars_[d.var]
            if info.kind not in ("divide", "split", "pos_divide", "pos_split") or info.role != "outer":
                raise ValidationError(f"distribute({d.var}): only the outer variable of a "
                                      "divide/split can be distributed")
            mdim = d.machine_dim or info.machine_dim
            if mdim is None:
                raise ValidationError(f"distribute({d.var}) needs a machine dimension")
            if info.machine_dim is not None and d.machine_dim is not None \
                    and d.machine_dim != info.machine_dim:
                raise ValidationError(f"{d.var} was divided by {info.machine_dim} but "
                                      f"distributed over {d.machine_dim}")
            if any(v == d.var for v, _ in distributed):
                raise ValidationError(f"{d.var} is distributed twice")
            if any(m == mdim for _, m in distributed):
                raise ValidationError(f"two loops distributed over machine dimension {mdim}")
            distributed.append((d.var, mdim))
        elif isinstance(d, Communicate):
            if d.var not in vars_:
                raise ValidationError(f"unknown index variable {d.var}")
            for t in d.tensors:
                if t not in stmt.tensors:
                    raise ValidationError(f"communicate names unknown tensor {t}")
                communicate[t] = d.var
        elif isinstance(d, Parallelize):
            if d.var not in vars_:
                raise ValidationError(f"unknown index variable {d.var}")
            parallelize[d.var] = d.annotation
        else:
            raise ValidationError(f"unsupported directive {d!r}")

    dist_vars = [v for v, _ in distributed]
    if order[:len(dist_vars)] != [v for v in order if v in dist_vars]:
        raise ValidationError("distributed loops must be the outermost loops")
    if sorted(order[:len(dist_vars)]) != sorted(dist_vars):
        raise ValidationError("distributed loops must be the outermost loops")
    for t, v in communicate.items():
        if dist_vars and v not in dist_vars:
            raise ValidationError(f"communicate({t}) at {v}: communication is supported only "
                                  "at distributed loops")

    leaf: list[str] = []
    for v in order:
        for o in vars_[v].originals:
            if o not in leaf:
                leaf.append(o)

    for name in stmt.tensors:
        fmt = formats[name]
        if fmt.all_dense:
            continue
        svars = _storage_vars(stmt, name, fmt)
        ranks = [leaf.index(v) for v in svars]
        if ranks != sorted(ranks):
            raise ValidationError(f"loop order {leaf} iterates {name} against its storage order "
                                  f"{svars}")

    pos_dist = []
    for v in dist_vars:
        tensors = ScheduledStatement(stmt, schedule, vars_, order, distributed).position_tensors(v)
        if len(tensors) > 1:
            raise ValidationError(f"{v} strip-mines the positions of several tensors {sorted(tensors)}")
        if tensors:
            pos_dist.append(v)
    if len(pos_dist) > 1:
        raise ValidationError("at most one distributed loop may iterate over positions")
    for v, info in vars_.items():
        if info.kind not in ("pos_divide", "pos_split") or info.role != "outer":
            continue
        t = info.tensor
        if t not in stmt.input_tensors:
            raise ValidationError(f"position split over {t}, which is not an input of {stmt}")
        svars = _storage_vars(stmt, t, formats[t])
        fused = list(info.originals)
        if svars[:len(fused)] != fused:
            raise ValidationError(f"position split of {info.parents[0]} over {t}: the variable must "
                                  f"cover {t}'s outermost levels {svars[:len(fused)]} in order")
        if formats[t].levels[len(fused) - 1] != COMPRESSED:
            raise ValidationError(f"position split over {t} needs a compressed level under "
                                  f"{fused[-1]}")
        if any(t not in term.tensors for term in stmt.terms):
            raise ValidationError("union iteration is incompatible with non-zero splitting")

    loop_tensors: dict[str, list[tuple[str, int]]] = {}
    for v in order:
        hits = []
        for name in stmt.tensors:
            svars = _storage_vars(stmt, name, formats[name])
            for s, sv in enumerate(svars):
                if sv in vars_[v].originals:
                    hits.append((name, s))
        loop_tensors[v] = hits
    for v in dist_vars:
        if not any(t != stmt.lhs.tensor for t, _ in loop_tensors[v]):
            raise ValidationError(f"distributed variable {v} indexes no input tensor")

    return ScheduledStatement(stmt, schedule, vars_, order, distributed, communicate,
                              parallelize, leaf, loop_tensors)


def classify_iteration(graph: ScheduledStatement, var: str):
    """Whether ``var`` walks coordinate values or the stored positions of one tensor."""
    tensors = graph.position_tensors(var)
    if len(tensors) > 1:
        raise ValidationError(f"{var} iterates the positions of several tensors")
    if tensors:
        return CoordinatePosition(tensors.pop())
    return CoordinateValue()
