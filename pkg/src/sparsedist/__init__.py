"""Sparse tensor algebra on a simulated distributed machine.

Pipeline: parse an index-notation statement, its level formats, tensor
distributions and a schedule; plan the partitioning; bind it to data; and
execute per worker with communication and load accounting.
"""

from .core import (CoordRange, IndexSpace, Partition, Region, copy_partition, image,
                   intersect, partition_by_bounds, preimage, replicated)
from .errors import (AssemblyError, ClosureError, ParseError, ShapeError, SparseDistError,
                     ValidationError)
from .formats import FormatSpec, parse_format
from .kernels import KERNELS
from .machine import MachineGrid, parse_grid
from .planner import bind, lower_tdn, plan
from .render import render_plan
from .runtime import ExecutionResult, Stats, execute, run
from .schedule import parse_schedule
from .tdn import parse_tdn
from .tensor import SparseTensor
from .tin import parse_tin
from .tio import load_tensor, store_tensor

__all__ = [
    "AssemblyError", "ClosureError", "CoordRange", "ExecutionResult", "FormatSpec", "IndexSpace",
    "KERNELS", "MachineGrid", "ParseError", "Partition", "Region", "ShapeError",
    "SparseDistError", "SparseTensor", "Stats", "ValidationError", "bind", "copy_partition",
    "execute", "image", "intersect", "load_tensor", "lower_tdn", "parse_format", "parse_grid",
    "parse_schedule", "parse_tdn", "parse_tin", "partition_by_bounds", "plan", "preimage",
    "render_plan", "replicated", "run", "store_tensor",
]
