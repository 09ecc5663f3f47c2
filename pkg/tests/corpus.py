"""Random instances and hand examples shared by the test modules."""

from __future__ import annotations

import numpy as np

from sparsedist.formats import parse_format
from sparsedist.kernels import KERNELS
from sparsedist.tensor import SparseTensor

PIECES = (1, 2, 3, 4, 7)

# Three-index tensors stay smaller so the dense oracle's iteration space is
# bounded; every extent is still within the 64-per-mode ceiling.
MATRIX_MAX = 64
CUBE_MAX = 24


def csr_matrix(values=(1.0, 2.0, 3.0, 4.0), fmt="ds") -> SparseTensor:
    """The 3x3 example: (0,0),(0,1),(1,1),(2,2)."""
    coords = [(0, 0), (0, 1), (1, 1), (2, 2)]
    return SparseTensor.from_coo((3, 3), coords, values, parse_format(fmt), name="B")


def straddle_matrix() -> SparseTensor:
    """Two rows, row 0 holding three of the four nonzeros: pos=[(0,2),(3,3)]."""
    coords = [(0, 0), (0, 1), (0, 2), (1, 0)]
    return SparseTensor.from_coo((2, 3), coords, [1.0, 2.0, 3.0, 4.0], parse_format("ds"),
                                 name="B")


def random_tensor(rng, dims, fmt, density, integer=False) -> SparseTensor:
    def draw(n):
        if integer:
            return rng.integers(1, 6, size=n).astype(float)
        return rng.uniform(0.5, 1.5, size=n)

    if fmt.all_dense:
        return SparseTensor.from_dense(draw(int(np.prod(dims))).reshape(dims), fmt)
    volume = int(np.prod(dims))
    count = int(rng.binomial(volume, density))
    lin = rng.choice(volume, size=count, replace=False)
    coords = np.stack(np.unravel_index(lin, dims), axis=1) if count else np.zeros((0, len(dims)))
    return SparseTensor.from_coo(dims, coords, draw(count), fmt)


def random_instance(kernel_name: str, rng, integer=False) -> dict[str, SparseTensor]:
    kernel = KERNELS[kernel_name]
    stmt, formats = kernel.stmt, kernel.format_specs()
    cube = any(len(a.vars) > 2 for a in stmt.accesses)
    top = CUBE_MAX if cube else MATRIX_MAX
    extents = {v: int(rng.integers(1, top + 1)) for v in stmt.index_vars}
    density = float(rng.uniform(0.01, 0.10))
    return {acc.tensor: random_tensor(rng, tuple(extents[v] for v in acc.vars),
                                      formats[acc.tensor], density, integer)
            for acc in stmt.accesses}
