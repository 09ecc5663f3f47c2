"""Tensor index notation: ``A(i,j) = B(i,j,k) * c(k) + ...``.

The right-hand side is a sum of products of accesses.  Index variables that
appear only on the right-hand side are summed over.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import ParseError, ValidationError

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[()=,+*·]))")


@dataclass(frozen=True)
class Access:
    tensor: str
    vars: tuple[str, ...]

    def __str__(self):
        return f"{self.tensor}({','.join(self.vars)})"


@dataclass(frozen=True)
class Term:
    factors: tuple[Access, ...]

    def __str__(self):
        return " * ".join(str(f) for f in self.factors)

    @property
    def tensors(self) -> tuple[str, ...]:
        return tuple(f.tensor for f in self.factors)


@dataclass(frozen=True)
class TinStatement:
    lhs: Access
    terms: tuple[Term, ...]

    def __str__(self):
        return f"{self.lhs} = " + " + ".join(str(t) for t in self.terms)

    @property
    def accesses(self) -> list[Access]:
        return [f for t in self.terms for f in t.factors]

    @property
    def rhs_vars(self) -> list[str]:
        seen: list[str] = []
        for acc in self.accesses:
            for v in acc.vars:
                if v not in seen:
                    seen.append(v)
        return seen

    @property
    def reduction_vars(self) -> list[str]:
        return [v for v in self.rhs_vars if v not in self.lhs.vars]

    @property
    def index_vars(self) -> list[str]:
        return list(self.lhs.vars) + self.reduction_vars

    @property
    def input_tensors(self) -> list[str]:
        names: list[str] = []
        for acc in self.accesses:
            if acc.tensor not in names:
                names.append(acc.tensor)
        return names

    @property
    def tensors(self) -> list[str]:
        return [self.lhs.tensor] + self.input_tensors

    def access_of(self, tensor: str) -> Access:
        if tensor == self.lhs.tensor:
            return self.lhs
        for acc in self.accesses:
            if acc.tensor == tensor:
                return acc
        raise KeyError(tensor)

    @property
    def is_union(self) -> bool:
        return len(self.terms) > 1


def _tokens(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        out.append(m.group("name") or ("*" if m.group("op") == "·" else m.group("op")))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ParseError(f"expected {expected or 'a token'}, found {tok or 'end of input'}")
        self.i += 1
        return tok

    def name(self):
        tok = self.take()
        if not re.fullmatch(r"[A-Za-z_]\w*", tok):
            raise ParseError(f"expected a name, found {tok!r}")
        return tok

    def access(self):
        tensor = self.name()
        self.take("(")
        names = []
        if self.peek() != ")":
            names.append(self.name())
            while self.peek() == ",":
                self.take(",")
                names.append(self.name())
        self.take(")")
        return Access(tensor, tuple(names))

    def term(self):
        factors = [self.access()]
        while self.peek() == "*":
            self.take("*")
            factors.append(self.access())
        return Term(tuple(factors))


def parse_tin(text: str, orders: Mapping[str, int] | None = None) -> TinStatement:
    """Parse and validate a statement; ``orders`` optionally pins tensor orders."""
    p = _Parser(text)
    lhs = p.access()
    p.take("=")
    terms = [p.term()]
    while p.peek() == "+":
        p.take("+")
        terms.append(p.term())
    if p.peek() is not None:
        raise ParseError(f"trailing input starting at {p.peek()!r}")
    stmt = TinStatement(lhs, tuple(terms))
    validate_tin(stmt, orders)
    return stmt


def validate_tin(stmt: TinStatement, orders: Mapping[str, int] | None = None) -> None:
    arity: dict[str, int] = {}
    for acc in [stmt.lhs] + stmt.accesses:
        if len(set(acc.vars)) != len(acc.vars):
            raise ValidationError(f"repeated index variable in {acc}")
        if acc.tensor in arity and arity[acc.tensor] != len(acc.vars):
            raise ValidationError(f"tensor {acc.tensor} used with arity {arity[acc.tensor]} "
                                  f"and {len(acc.vars)}")
        arity[acc.tensor] = len(acc.vars)
        if orders is not None and acc.tensor in orders and orders[acc.tensor] != len(acc.vars):
            raise ValidationError(f"{acc} has arity {len(acc.vars)} but {acc.tensor} "
                                  f"has order {orders[acc.tensor]}")
    names = [acc.tensor for acc in stmt.accesses]
    if len(set(names)) != len(names):
        raise ValidationError("each input tensor may be accessed only once")
    if stmt.lhs.tensor in stmt.input_tensors:
        raise ValidationError(f"output {stmt.lhs.tensor} also appears on the right-hand side")
    rhs = set(stmt.rhs_vars)
    for v in stmt.lhs.vars:
        if v not in rhs:
            raise ValidationError(f"left-hand side variable {v} does not appear on the right")
