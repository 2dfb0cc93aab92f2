"""Pure numpy implementations of the hot kernels.

These are the reference versions; the compiled module in ``_ckernels.pyx``
computes the same quantities with a fused loop.
"""
import numpy as np


def ray_characteristic(coords, weights, directions, dk, n_k):
    """Lattice sums ``sum_c w_c exp(i m dk_f (coords_c . dir_f))`` for m = 0..n_k[f]-1.

    Parameters
    ----------
    coords : (n_cells, D) float array
    weights : (n_cells,) float array
    directions : (n_frames, D) float array
    dk : (n_frames,) float array
        Frequency step per frame.
    n_k : int or (n_frames,) int array
        Number of frequencies per frame.

    Returns
    -------
    (n_frames, max(n_k)) complex array, zero past each frame's count
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    dk = np.atleast_1d(np.asarray(dk, dtype=np.float64))
    n_f = directions.shape[0]
    dk = np.broadcast_to(dk, (n_f,))
    counts = np.broadcast_to(np.asarray(n_k, dtype=np.int64), (n_f,))
    out = np.zeros((n_f, int(counts.max())), dtype=np.complex128)
    for f in range(n_f):
        s = coords @ directions[f]
        rot = np.exp(1j * dk[f] * s)
        z = weights.astype(np.complex128)
        for m in range(counts[f]):
            out[f, m] = z.sum()
            z *= rot
    return out


def radon_bin(s, weights, x0, h, n_bins):
    """Deposit ``weights`` at positions ``s`` onto a uniform grid by linear splitting.

    Returns the per-bin mass and the mass that fell outside the grid.
    """
    s = np.asarray(s, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    t = (s - x0) / h
    i0 = np.floor(t).astype(np.int64)
    frac = t - i0
    hist = np.zeros(n_bins)
    inside = (i0 >= 0) & (i0 < n_bins - 1)
    # the last grid point is reachable only as the right neighbour
    at_end = (i0 == n_bins - 1) & (frac == 0.0)
    np.add.at(hist, i0[inside], weights[inside] * (1.0 - frac[inside]))
    np.add.at(hist, i0[inside] + 1, weights[inside] * frac[inside])
    np.add.at(hist, i0[at_end], weights[at_end])
    outside = weights[~(inside | at_end)].sum()
    return hist, float(outside)
