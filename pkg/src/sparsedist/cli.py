"""Command-line driver: ``sparsedist {run,plan,partition,oracle}``.

Exit codes are 0 on success, 1 for runtime failures (closure violations,
assembly errors, unreadable files) and 2 for invalid programs or inputs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import ShapeError, SparseDistError, ValidationError
from .formats import FormatSpec, parse_format
from .machine import MachineGrid, parse_grid
from .planner import bind, plan as make_plan
from .render import render_plan
from .runtime import MODES, execute, resident_bundles
from .tdn import TdnStatement, parse_tdn
from .tensor import SparseTensor
from .tin import TinStatement, parse_tin
from .tio import load_tensor, store_tensor


@dataclass
class RunConfig:
    expr: TinStatement
    formats: dict[str, FormatSpec]
    tdns: dict[str, TdnStatement]
    schedule: str
    grid: MachineGrid
    inputs: dict[str, str] = field(default_factory=dict)
    dims: dict[str, tuple[int, ...]] = field(default_factory=dict)
    output: str | None = None
    stats: str | None = None
    mode: str = "seq"
    name: str = "kernel"


def _pairs(items, what):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"--{what} expects T=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    stmt = parse_tin(args.expr)
    formats = {t: parse_format(f) for t, f in _pairs(args.format, "format").items()}
    for t in stmt.tensors:
        if t not in formats:
            raise ValidationError(f"no format for tensor {t}")
    for t in formats:
        if t not in stmt.tensors:
            raise ValidationError(f"format given for {t}, which the expression does not use")
    tdns = {}
    for t, text in _pairs(args.tdn, "tdn").items():
        tdn = parse_tdn(text)
        if tdn.tensor != t:
            raise ValidationError(f"--tdn {t}=... describes tensor {tdn.tensor}")
        tdns[t] = tdn
    if args.pieces is not None and args.grid is not None:
        raise ValidationError("give either --grid or --pieces, not both")
    grid = MachineGrid.of(args.pieces) if args.pieces is not None else parse_grid(args.grid or "1")
    dims = {}
    for t, text in _pairs(getattr(args, "dims", None), "dims").items():
        try:
            dims[t] = tuple(int(d) for d in text.split(","))
        except ValueError:
            raise ValidationError(f"bad --dims for {t}: {text!r}") from None
    return RunConfig(stmt, formats, tdns, args.schedule or "", grid,
                     _pairs(getattr(args, "input", None), "input"), dims,
                     getattr(args, "output", None), getattr(args, "stats", None),
                     getattr(args, "mode", "seq") or "seq", args.name)


def _load_inputs(cfg: RunConfig) -> dict[str, SparseTensor]:
    tensors = {}
    for t in cfg.expr.input_tensors:
        if t not in cfg.inputs:
            raise ValidationError(f"no input file for tensor {t}")
        tensors[t] = load_tensor(cfg.inputs[t], cfg.formats[t], dims=cfg.dims.get(t), name=t)
    return tensors


def _runs(indices: np.ndarray) -> str:
    if not len(indices):
        return "-"
    breaks = np.flatnonzero(np.diff(indices) != 1)
    starts = np.concatenate([[indices[0]], indices[breaks + 1]])
    ends = np.concatenate([indices[breaks], [indices[-1]]])
    return " ".join(f"{a}" if a == b else f"{a}..{b}" for a, b in zip(starts, ends))


def format_bundles(bundles) -> str:
    """Per-color index assignment of every region, one line per color."""
    lines = []
    for t in bundles:
        for li, role, part in bundles[t].regions():
            label = f"{t}.vals" if li is None else f"{t}[{li}].{role}"
            lines.append(label)
            for c in part.colors:
                lines.append(f"  {c}: {_runs(part[c])}")
    return "\n".join(lines) + "\n"


def cmd_run(cfg: RunConfig) -> int:
    tensors = _load_inputs(cfg)
    p = make_plan(cfg.expr, cfg.formats, cfg.schedule, cfg.grid, name=cfg.name)
    result = execute(bind(p, tensors), cfg.mode, tdns=cfg.tdns)
    if cfg.output:
        store_tensor(result.output, cfg.output)
    if cfg.stats:
        with open(cfg.stats, "w") as fh:
            fh.write(result.stats.to_json() + "\n")
    if not cfg.output and not cfg.stats:
        print(result.stats.to_json())
    return 0


def cmd_plan(cfg: RunConfig) -> int:
    sys.stdout.write(render_plan(make_plan(cfg.expr, cfg.formats, cfg.schedule, cfg.grid,
                                           name=cfg.name)))
    return 0


def cmd_partition(cfg: RunConfig, placement: bool = False) -> int:
    tensors = _load_inputs(cfg)
    if placement:
        bundles = resident_bundles(cfg.expr, cfg.formats, tensors, cfg.grid, cfg.tdns)
    else:
        p = make_plan(cfg.expr, cfg.formats, cfg.schedule, cfg.grid, name=cfg.name)
        bundles = bind(p, tensors).bundles
    sys.stdout.write(format_bundles(bundles))
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    tensors = _load_inputs(cfg)
    dense = oracle.dense_eval(cfg.expr, {t: oracle.densify(x) for t, x in tensors.items()})
    out = cfg.expr.lhs.tensor
    result = SparseTensor.from_dense(dense, cfg.formats[out], name=out)
    if cfg.output:
        store_tensor(result, cfg.output)
    else:
        coords, leaves = result.leaf_coords()
        for c, leaf in zip(coords, leaves):
            print(" ".join(str(int(x) + 1) for x in c), repr(float(result.vals.data[leaf])))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsedist",
                                     description="Distributed sparse tensor algebra simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inputs=True):
        p.add_argument("--expr", required=True, help='e.g. "a(i) = B(i,j) * c(j)"')
        p.add_argument("--format", action="append", metavar="T=FMT",
                       help="per-tensor level formats such as B=ds or B=ds:1,0")
        p.add_argument("--tdn", action="append", metavar="T=TDN",
                       help='tensor placement, e.g. B="B(x,y) onto M(x)"')
        p.add_argument("--schedule", default="", help="semicolon-separated directives")
        p.add_argument("--grid", help='machine grid: "4", "2x2" or "x=2,y=2"')
        p.add_argument("--pieces", type=int, help="shorthand for a one-dimensional grid")
        p.add_argument("--name", default="kernel", help="kernel name shown in plan listings")
        if inputs:
            p.add_argument("--input", action="append", metavar="T=PATH",
                           help=".tns or .mtx file for an input tensor")
            p.add_argument("--dims", action="append", metavar="T=N,M",
                           help="extents for .tns inputs whose trailing slices are empty")

    run = sub.add_parser("run", help="plan, execute and write the output")
    common(run)
    run.add_argument("--output", help="output .tns path")
    run.add_argument("--stats", help="stats JSON path")
    run.add_argument("--mode", choices=MODES, default="seq")
    common(sub.add_parser("plan", help="print the generated pseudo-code"), inputs=False)
    part = sub.add_parser("partition", help="print per-color index assignments")
    common(part)
    part.add_argument("--placement", action="store_true",
                      help="dump the TDN placement instead of the schedule's partitions")
    orc = sub.add_parser("oracle", help="evaluate densely and write the result")
    common(orc)
    orc.add_argument("--output", help="output .tns path")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "partition":
            return cmd_partition(cfg, args.placement)
        return cmd_oracle(cfg)
    except (ValidationError, ShapeError) as exc:
        print(f"sparsedist: error: {exc}", file=sys.stderr)
        return 2
    except (SparseDistError, OSError) as exc:
        print(f"sparsedist: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
