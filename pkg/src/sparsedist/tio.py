"""FROSTT ``.tns`` and MatrixMarket coordinate files.

Both formats are 1-indexed on disk; storage is 0-indexed.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

from .errors import TensorFormatError
from .formats import FormatSpec
from .tensor import SparseTensor

_MM_BANNER = "%%matrixmarket"
_MM_FIELDS = ("real", "integer", "double")


def _read_tns(path: str, order: int | None):
    coords, values = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if order is None:
                order = len(parts) - 1
            if len(parts) != order + 1:
                raise TensorFormatError(f"{path}:{lineno}: expected {order} coordinates and a value")
            try:
                coords.append([int(p) - 1 for p in parts[:-1]])
                values.append(float(parts[-1]))
            except ValueError:
                raise TensorFormatError(f"{path}:{lineno}: malformed entry {line!r}") from None
    return coords, values, None


def _read_mtx(path: str):
    with open(path) as fh:
        header = fh.readline().strip()
        words = header.lower().split()
        if len(words) < 5 or words[0] != _MM_BANNER or words[1] != "matrix":
            raise TensorFormatError(f"{path}: unsupported MatrixMarket header {header!r}")
        if words[2] != "coordinate" or words[3] not in _MM_FIELDS or words[4] != "general":
            raise TensorFormatError(f"{path}: unsupported MatrixMarket header {header!r}")
        dims = None
        coords, values = [], []
        expected = 0
        for lineno, line in enumerate(fh, 2):
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            try:
                if dims is None:
                    rows, cols, expected = (int(p) for p in parts)
                    dims = (rows, cols)
                    continue
                if len(parts) != 3:
                    raise ValueError
                coords.append([int(parts[0]) - 1, int(parts[1]) - 1])
                values.append(float(parts[2]))
            except ValueError:
                raise TensorFormatError(f"{path}:{lineno}: malformed line {line!r}") from None
        if dims is None:
            raise TensorFormatError(f"{path}: missing size line")
        if len(values) != expected:
            raise TensorFormatError(f"{path}: header declares {expected} entries, found {len(values)}")
    return coords, values, dims


def load_tensor(path: str, fmt: FormatSpec, mode_order: Sequence[int] | None = None,
                dims: Sequence[int] | None = None, name: str | None = None) -> SparseTensor:
    """Read a ``.tns`` or ``.mtx`` file and pack it into ``fmt``.

    ``dims`` is required for ``.tns`` files whose trailing slices are empty (the
    format has no header); otherwise it is inferred from the largest coordinate.
    """
    if mode_order is not None:
        fmt = FormatSpec(fmt.levels, tuple(mode_order))
    if path.endswith(".mtx"):
        coords, values, file_dims = _read_mtx(path)
    else:
        coords, values, file_dims = _read_tns(path, fmt.order)
    coords = np.asarray(coords, dtype=np.int64).reshape(-1, fmt.order)
    if file_dims is not None:
        if dims is not None and tuple(dims) != tuple(file_dims):
            raise TensorFormatError(f"{path}: declared dims {tuple(dims)} differ from header {file_dims}")
        dims = file_dims
    elif dims is None:
        dims = tuple(int(c) + 1 for c in coords.max(axis=0)) if len(coords) else (0,) * fmt.order
    dims = tuple(int(d) for d in dims)
    if len(dims) != fmt.order:
        raise TensorFormatError(f"{path}: tensor order {len(dims)} does not match format {fmt}")
    if len(coords) and (np.any(coords < 0) or np.any(coords >= np.asarray(dims))):
        raise TensorFormatError(f"{path}: coordinate outside declared dims {dims}")
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return SparseTensor.from_coo(dims, coords, values, fmt, name=name)


def store_tensor(tensor: SparseTensor, path: str) -> None:
    """Write every stored leaf (explicit zeros included) 1-indexed."""
    coords, positions = tensor.leaf_coords()
    vals = tensor.vals.data[positions]
    order = np.lexsort(coords.T[::-1]) if len(coords) and coords.shape[1] else np.arange(len(coords))
    with open(path, "w") as fh:
        if path.endswith(".mtx"):
            if tensor.order != 2:
                raise TensorFormatError("MatrixMarket output needs a matrix")
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            fh.write(f"{tensor.dims[0]} {tensor.dims[1]} {len(vals)}\n")
        for k in order:
            fh.write(" ".join(str(int(c) + 1) for c in coords[k]) + f" {float(vals[k])!r}\n")
