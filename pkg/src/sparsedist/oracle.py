"""Dense brute-force ground truth.

Nothing here shares iteration code with the runtime: :func:`densify` walks the
coordinate tree recursively, and :func:`dense_eval` broadcasts every operand
over the full index-variable space and sums out the reduction axes.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .formats import FormatSpec
from .tensor import CompressedLevel, SparseTensor
from .tin import TinStatement

TRIP_CAP = 10 ** 8


def densify(tensor: SparseTensor) -> np.ndarray:
    """Stored values at their coordinates, zeros elsewhere."""
    out = np.zeros(tensor.dims)
    storage = [0] * tensor.order
    order = tensor.fmt.mode_order

    def walk(li: int, parent: int):
        if li == len(tensor.levels):
            coord = [0] * tensor.order
            for s, m in enumerate(order):
                coord[m] = storage[s]
            out[tuple(coord)] = tensor.vals.data[parent]
            return
        level = tensor.levels[li]
        if isinstance(level, CompressedLevel):
            lo, hi = level.pos.data[parent]
            for p in range(lo, hi + 1):
                storage[level.first_storage_mode] = int(level.crd.data[p])
                walk(li + 1, p)
        else:
            for local in range(level.dom.volume):
                point = np.unravel_index(local, level.dom.extents)
                for j, x in enumerate(point):
                    storage[level.first_storage_mode + j] = int(x)
                walk(li + 1, parent * level.dom.volume + local)

    if tensor.order == 0:
        return np.asarray(tensor.vals.data[0]) if tensor.nnz else np.zeros(())
    walk(0, 0)
    return out


def sparsify(array, fmt: FormatSpec, name: str | None = None) -> SparseTensor:
    """Pack ``array``, dropping exact zeros below compressed levels."""
    return SparseTensor.from_dense(array, fmt, name=name)


def pattern(tensor: SparseTensor) -> np.ndarray:
    """Boolean mask of stored coordinates."""
    mask = np.zeros(tensor.dims, dtype=bool)
    coords = [0] * tensor.order

    def walk(li, parent):
        if li == len(tensor.levels):
            c = [0] * tensor.order
            for s, m in enumerate(tensor.fmt.mode_order):
                c[m] = coords[s]
            mask[tuple(c)] = True
            return
        level = tensor.levels[li]
        if isinstance(level, CompressedLevel):
            lo, hi = level.pos.data[parent]
            for p in range(lo, hi + 1):
                coords[level.first_storage_mode] = int(level.crd.data[p])
                walk(li + 1, p)
        else:
            for local in range(level.dom.volume):
                for j, x in enumerate(np.unravel_index(local, level.dom.extents)):
                    coords[level.first_storage_mode + j] = int(x)
                walk(li + 1, parent * level.dom.volume + local)

    if tensor.order == 0:
        return np.asarray(True)
    walk(0, 0)
    return mask


def _extents(stmt: TinStatement, inputs: Mapping[str, np.ndarray]) -> dict[str, int]:
    ext: dict[str, int] = {}
    for acc in stmt.accesses:
        for v, n in zip(acc.vars, np.shape(inputs[acc.tensor])):
            if ext.setdefault(v, n) != n:
                raise ValueError(f"inconsistent extent for {v}")
    return ext


def _broadcast(array, vars_, space):
    """View ``array`` (indexed by ``vars_``) over all variables in ``space``."""
    perm = [vars_.index(v) for v in space if v in vars_]
    arr = np.transpose(array, perm) if perm else np.asarray(array)
    shape = [arr.shape[perm.index(vars_.index(v))] if v in vars_ else 1 for v in space]
    return arr.reshape(shape)


def _evaluate(stmt: TinStatement, inputs, combine_term, combine_sum, reduce):
    ext = _extents(stmt, inputs)
    space = list(stmt.lhs.vars) + stmt.reduction_vars
    trips = int(np.prod([ext[v] for v in space])) if space else 1
    if trips > TRIP_CAP:
        raise ValueError(f"oracle trip count {trips} exceeds {TRIP_CAP}")
    full = tuple(ext[v] for v in space)
    total = None
    for term in stmt.terms:
        value = None
        for acc in term.factors:
            b = _broadcast(np.asarray(inputs[acc.tensor]), list(acc.vars), space)
            value = b if value is None else combine_term(value, b)
        value = np.broadcast_to(value, full)
        total = value if total is None else combine_sum(total, value)
    axes = tuple(range(len(stmt.lhs.vars), len(space)))
    return reduce(total, axes) if axes else np.array(total, copy=True)


def dense_eval(stmt: TinStatement, inputs: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate the statement over dense arrays by its index-notation meaning."""
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()}
    return _evaluate(stmt, arrays, np.multiply, np.add, lambda a, ax: a.sum(axis=ax))


def structural_pattern(stmt: TinStatement, patterns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Output coordinates where some term has every factor stored (AND within, OR across)."""
    masks = {k: np.asarray(v, dtype=bool) for k, v in patterns.items()}
    return _evaluate(stmt, masks, np.logical_and, np.logical_or,
                     lambda a, ax: a.any(axis=ax))
