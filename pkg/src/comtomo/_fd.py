"""Central finite-difference stencils on uniform grids."""
from functools import lru_cache
from math import factorial

import numpy as np


@lru_cache(maxsize=None)
def central_stencil(order: int, accuracy: int = 4) -> np.ndarray:
    """Weights for the ``order``-th derivative on offsets -r..r (unit spacing)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    npts = 2 * ((order + 1) // 2) - 1 + accuracy
    r = npts // 2
    offsets = np.arange(-r, r + 1, dtype=float)
    A = np.vander(offsets, npts, increasing=True).T
    b = np.zeros(npts)
    b[order] = factorial(order)
    w = np.linalg.solve(A, b)
    w[np.abs(w) < 1e-13] = 0.0
    w.setflags(write=False)
    return w


def derivative(values: np.ndarray, axis: int, h: float, order: int = 1, accuracy: int = 4) -> np.ndarray:
    """Central difference along ``axis``; points within the stencil radius of an edge are NaN."""
    w = central_stencil(order, accuracy)
    r = w.size // 2
    v = np.moveaxis(values, axis, -1)
    n = v.shape[-1]
    out = np.full(v.shape, np.nan, dtype=np.result_type(v, float))
    if n > 2 * r:
        acc = np.zeros(v.shape[:-1] + (n - 2 * r,), dtype=out.dtype)
        for i, c in enumerate(w):
            if c != 0.0:
                acc = acc + c * v[..., i : n - 2 * r + i]
        out[..., r : n - r] = acc / h**order
    return np.moveaxis(out, -1, axis)
