"""The six benchmark kernels with their formats, schedules and distributions.

Each kernel offers a row (outer-dimension) strategy and, where the iteration
is a single product, a fused non-zero strategy.  The schedules and TDN
statements are written for a one-dimensional grid named ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formats import FormatSpec, parse_format
from .tdn import TdnStatement, parse_tdn
from .tin import TinStatement, parse_tin


@dataclass(frozen=True)
class Strategy:
    schedule: str
    tdns: dict[str, str]


@dataclass(frozen=True)
class Kernel:
    name: str
    expr: str
    formats: dict[str, str]
    row: Strategy
    nonzero: Strategy | None

    @property
    def stmt(self) -> TinStatement:
        return parse_tin(self.expr)

    def format_specs(self) -> dict[str, FormatSpec]:
        return {t: parse_format(f) for t, f in self.formats.items()}

    def strategies(self) -> dict[str, Strategy]:
        out = {"row": self.row}
        if self.nonzero is not None:
            out["nonzero"] = self.nonzero
        return out

    @staticmethod
    def tdn_statements(strategy: Strategy) -> dict[str, TdnStatement]:
        return {t: parse_tdn(text) for t, text in strategy.tdns.items()}


def _row(outer: str, order: str = "", comm: str = "") -> str:
    prefix = f"reorder({order}); " if order else ""
    return prefix + f"divide({outer},{outer}o,{outer}i,x); distribute({outer}o)" + (
        f"; communicate({{{comm}}},{outer}o)" if comm else "")


SPMV = Kernel(
    "spmv", "a(i) = B(i,j) * c(j)", {"a": "d", "B": "ds", "c": "d"},
    Strategy(_row("i", comm="a,B,c") + "; parallelize(ii,cpu)",
             {"a": "a(x) onto M(x)", "B": "B(x,y) onto M(x)", "c": "c(y) onto M(x)"}),
    Strategy("fuse(i,j,f); pos_divide(f,fo,fi,x,B); distribute(fo); communicate({a,B,c},fo)",
             {"a": "a(x) onto M(x)", "B": "B(x,y) fuse(x,y->f) onto M(~f)",
              "c": "c(y) onto M(x)"}),
)

SPMM = Kernel(
    "spmm", "A(i,j) = B(i,k) * C(k,j)", {"A": "dd", "B": "ds", "C": "dd"},
    Strategy(_row("i", order="i,k,j"),
             {"A": "A(x,y) onto M(x)", "B": "B(x,y) onto M(x)", "C": "C(u,v) onto M(x)"}),
    Strategy("reorder(i,k,j); fuse(i,k,f); pos_divide(f,fo,fi,x,B); distribute(fo)",
             {"A": "A(x,y) onto M(x)", "B": "B(x,y) fuse(x,y->f) onto M(~f)",
              "C": "C(u,v) onto M(x)"}),
)

SPADD3 = Kernel(
    "spadd3", "A(i,j) = B(i,j) + C(i,j) + D(i,j)",
    {"A": "ds", "B": "ds", "C": "ds", "D": "ds"},
    Strategy(_row("i"),
             {t: f"{t}(x,y) onto M(x)" for t in "ABCD"}),
    None,
)

SDDMM = Kernel(
    "sddmm", "A(i,j) = B(i,j) * C(i,k) * D(k,j)",
    {"A": "ds", "B": "ds", "C": "dd", "D": "dd"},
    Strategy(_row("i"),
             {"A": "A(x,y) onto M(x)", "B": "B(x,y) onto M(x)", "C": "C(x,y) onto M(x)",
              "D": "D(u,v) onto M(x)"}),
    Strategy("fuse(i,j,f); pos_divide(f,fo,fi,x,B); distribute(fo)",
             {"A": "A(x,y) onto M(x)", "B": "B(x,y) fuse(x,y->f) onto M(~f)",
              "C": "C(x,y) onto M(x)", "D": "D(u,v) onto M(x)"}),
)

SPTTV = Kernel(
    "spttv", "A(i,j) = B(i,j,k) * c(k)", {"A": "ds", "B": "dss", "c": "d"},
    Strategy(_row("i"),
             {"A": "A(x,y) onto M(x)", "B": "B(x,y,z) onto M(x)", "c": "c(z) onto M(x)"}),
    Strategy("fuse(i,j,f); fuse(f,k,g); pos_divide(g,go,gi,x,B); distribute(go)",
             {"A": "A(x,y) onto M(x)", "B": "B(x,y,z) fuse(x,y,z->f) onto M(~f)",
              "c": "c(z) onto M(x)"}),
)

MTTKRP = Kernel(
    "mttkrp", "A(i,l) = B(i,j,k) * C(j,l) * D(k,l)",
    {"A": "dd", "B": "dss", "C": "dd", "D": "dd"},
    Strategy(_row("i", order="i,j,k,l"),
             {"A": "A(x,y) onto M(x)", "B": "B(x,y,z) onto M(x)", "C": "C(u,v) onto M(x)",
              "D": "D(u,v) onto M(x)"}),
    Strategy("reorder(i,j,k,l); fuse(i,j,f); fuse(f,k,g); pos_divide(g,go,gi,x,B); distribute(go)",
             {"A": "A(x,y) onto M(x)", "B": "B(x,y,z) fuse(x,y,z->f) onto M(~f)",
              "C": "C(u,v) onto M(x)", "D": "D(u,v) onto M(x)"}),
)

KERNELS = {k.name: k for k in (SPMV, SPMM, SPADD3, SDDMM, SPTTV, MTTKRP)}
