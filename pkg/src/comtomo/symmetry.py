"""Exchange symmetry of identical particles in the density, Wigner and tomogram pictures.

Swapping every variable of two particles (an entire permutation) leaves any
state of identical particles invariant, whatever the statistics. Swapping
only the coordinates of one side of the density matrix multiplies it by +1
(Bose) or -1 (Fermi); in the Wigner and tomogram pictures that partial
permutation is an integral transform.

Conventions
-----------
For two particles in one dimension write S = q1 + q2, P = p1 + p2. The
Wigner function of rho(q2', q1'; q1'', q2'') is

    W'(q, p) = (2 pi)^-1 int da db W(S/2 + a/2, S/2 - a/2, P/2 + b/2, P/2 - b/2)
                              exp(i[a (p1 - p2) - b (q1 - q2)]),

which is the two-delta kernel with prefactor 4 / (2 pi) read at swapped
coordinates. :func:`wigner_partial_permutation` returns ``sign * W'``, so a
state with the stated statistics is mapped onto itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    AxisGrid,
    CartesianFrames,
    ComTomogram,
    DensityMatrixGrid,
    Frame,
    InconsistentInputError,
    ModeLayout,
    TOL_COMPOSED,
    WignerGrid,
)
from .states import displacement_element, hermite_function
from .transforms import (
    TWO_PI,
    Characteristic,
    _half_shift,
    com_from_characteristic,
    com_to_characteristic,
    com_to_wigner,
    density_to_wigner,
    wigner_to_com,
)

STATISTICS = {"bose": 1, "fermi": -1}


def statistics_sign(statistics: str | int) -> int:
    if isinstance(statistics, str):
        try:
            return STATISTICS[statistics.lower()]
        except KeyError:
            raise ValueError(f"statistics must be 'bose' or 'fermi', got {statistics!r}") from None
    if statistics not in (1, -1):
        raise ValueError("statistics sign must be +1 or -1")
    return int(statistics)


@dataclass(frozen=True)
class TwoParticleState:
    """Two particles in one dimension built from oscillator orbitals.

    ``orbitals = (a, b)`` are number-state indices. With ``statistics`` set to
    ``"bose"`` or ``"fermi"`` the wave function is
    [phi_a(q1) phi_b(q2) +- phi_b(q1) phi_a(q2)] / norm; ``None`` keeps the
    plain product phi_a(q1) phi_b(q2), which is not exchange symmetric.
    """

    orbitals: tuple
    statistics: str | None = "fermi"

    def __post_init__(self):
        a, b = (int(v) for v in self.orbitals)
        if a < 0 or b < 0:
            raise ValueError("orbital indices must be non-negative")
        object.__setattr__(self, "orbitals", (a, b))
        if self.statistics is not None:
            statistics_sign(self.statistics)
            if self.statistics.lower() == "fermi" and a == b:
                raise ValueError("a Fermi pair needs two different orbitals")

    @property
    def layout(self) -> ModeLayout:
        return ModeLayout(N=2, d=1)

    @property
    def sign(self) -> int | None:
        return None if self.statistics is None else statistics_sign(self.statistics)

    def components(self) -> list:
        """(amplitude, orbital of particle 1, orbital of particle 2) terms of psi."""
        a, b = self.orbitals
        if self.statistics is None:
            return [(1.0, a, b)]
        if a == b:
            return [(1.0, a, a)]
        c = 1.0 / np.sqrt(2.0)
        return [(c, a, b), (self.sign * c, b, a)]

    def wavefunction(self, q1, q2) -> np.ndarray:
        q1, q2 = np.broadcast_arrays(np.asarray(q1, float), np.asarray(q2, float))
        out = np.zeros(q1.shape)
        for c, x, y in self.components():
            out = out + c * hermite_function(x, q1) * hermite_function(y, q2)
        return out

    def characteristic(self, mu, nu) -> np.ndarray:
        """chi = <psi| exp(i(mu.q + nu.p)) |psi>; modes on the last axis."""
        mu = np.asarray(mu, dtype=float)
        nu = np.asarray(nu, dtype=float)
        out = np.zeros(np.broadcast_shapes(mu.shape, nu.shape)[:-1], dtype=complex)
        comps = self.components()
        for ck, xk, yk in comps:
            for cl, xl, yl in comps:
                out = out + ck * cl * (
                    displacement_element(xk, xl, mu[..., 0], nu[..., 0])
                    * displacement_element(yk, yl, mu[..., 1], nu[..., 1])
                )
        return out

    def density(self, qgrid: AxisGrid) -> DensityMatrixGrid:
        q = qgrid.points
        psi = self.wavefunction(q[:, None], q[None, :])
        return DensityMatrixGrid.from_wavefunction(self.layout, (qgrid, qgrid), psi)

    def wigner(self, qgrid: AxisGrid, pgrid: AxisGrid | None = None) -> WignerGrid:
        return density_to_wigner(self.density(qgrid), (pgrid or qgrid,) * 2)

    def tomogram(self, frames: Sequence[Frame] | CartesianFrames, xgrid: AxisGrid) -> ComTomogram:
        return com_from_characteristic(self.layout, self.characteristic, frames, xgrid)


# ----------------------------------------------------------------------------
# entire and mixed swaps


def _blocks(layout: ModeLayout, i: int, j: int) -> tuple[list, list]:
    if layout.N < 2:
        raise ValueError("permutations need at least two particles")
    if not (0 <= i < layout.N and 0 <= j < layout.N) or i == j:
        raise ValueError(f"particle indices ({i}, {j}) are invalid for N={layout.N}")
    d = layout.d
    return list(range(i * d, (i + 1) * d)), list(range(j * d, (j + 1) * d))


def _mode_swap(layout: ModeLayout, i: int, j: int) -> np.ndarray:
    """Permutation of the Nd mode indices exchanging particles i and j."""
    bi, bj = _blocks(layout, i, j)
    perm = np.arange(layout.nd)
    perm[bi], perm[bj] = bj, bi
    return perm


def _swap_grid_axes(values: np.ndarray, perm_q: np.ndarray, perm_p: np.ndarray) -> np.ndarray:
    return np.transpose(values, list(perm_q) + list(len(perm_q) + perm_p))


def _same_grids(grids: Sequence[AxisGrid], perm: np.ndarray) -> None:
    for a, b in zip(grids, [grids[k] for k in perm]):
        if a != b:
            raise ValueError("exchanged particles must share their grids")


def _tomogram_swap(t: ComTomogram, perm_mu: np.ndarray, perm_nu: np.ndarray) -> np.ndarray:
    """Rows of ``t`` at the frames with mu and nu components permuted."""
    nd = t.layout.nd
    vec = t.frame_vectors
    swapped = np.concatenate([vec[:, perm_mu], vec[:, nd + perm_nu]], axis=1)
    cart = t.cartesian
    if cart is not None and len(cart.active) == 2 * nd:
        # Cartesian lookup: index arithmetic on each axis
        axes = cart.axes
        idx = []
        for c, ax in enumerate(axes):
            k = np.rint((swapped[:, c] - ax.min) / ax.h).astype(int)
            if np.any(np.abs(swapped[:, c] - (ax.min + k * ax.h)) > 1e-9 * max(1.0, ax.h)) or np.any((k < 0) | (k >= ax.n)):
                raise KeyError("swapped frames fall off the frame grid")
            idx.append(k)
        flat = np.ravel_multi_index(idx, cart.shape)
        mask = cart.nondegenerate_mask().ravel()
        rows = np.cumsum(mask) - 1
        return t.values[rows[flat]]
    lookup = {tuple(np.round(v, 12)): r for r, v in enumerate(vec)}
    try:
        return t.values[[lookup[tuple(np.round(v, 12))] for v in swapped]]
    except KeyError:
        raise KeyError("tomogram lacks the exchanged frames") from None


def entire_permutation_check(rep, i: int = 0, j: int = 1) -> float:
    """max |f(swapped) - f| with every variable of particles i and j exchanged.

    ``rep`` is a DensityMatrixGrid, WignerGrid or ComTomogram. The result is
    a measurement, not a pass/fail: non-symmetric states simply give a large
    number.
    """
    perm = _mode_swap(rep.layout, i, j)
    if isinstance(rep, DensityMatrixGrid):
        _same_grids(rep.qgrids, perm)
        return float(np.abs(_swap_grid_axes(rep.values, perm, perm) - rep.values).max())
    if isinstance(rep, WignerGrid):
        _same_grids(rep.qgrids, perm)
        _same_grids(rep.pgrids, perm)
        return float(np.abs(_swap_grid_axes(rep.values, perm, perm) - rep.values).max())
    if isinstance(rep, ComTomogram):
        return float(np.abs(_tomogram_swap(rep, perm, perm) - rep.values).max())
    raise TypeError(f"unsupported representation {type(rep).__name__}")


def mixed_swap_check(rep, i: int = 0, j: int = 1) -> float:
    """max |f(q swapped) - f(p swapped)| for W, or the mu/nu analogue for w."""
    perm = _mode_swap(rep.layout, i, j)
    ident = np.arange(rep.layout.nd)
    if isinstance(rep, WignerGrid):
        _same_grids(rep.qgrids, perm)
        _same_grids(rep.pgrids, perm)
        a = _swap_grid_axes(rep.values, perm, ident)
        b = _swap_grid_axes(rep.values, ident, perm)
        return float(np.abs(a - b).max())
    if isinstance(rep, ComTomogram):
        return float(np.abs(_tomogram_swap(rep, perm, ident) - _tomogram_swap(rep, ident, perm)).max())
    raise TypeError(f"unsupported representation {type(rep).__name__}")


def permute_density(rho: DensityMatrixGrid, side: str = "left", i: int = 0, j: int = 1) -> np.ndarray:
    """rho with the coordinates of particles i and j exchanged on one side only."""
    perm = _mode_swap(rho.layout, i, j)
    _same_grids(rho.qgrids, perm)
    ident = np.arange(rho.layout.nd)
    if side == "left":
        return _swap_grid_axes(rho.values, perm, ident)
    if side == "right":
        return _swap_grid_axes(rho.values, ident, perm)
    raise ValueError("side must be 'left' or 'right'")


# ----------------------------------------------------------------------------
# partial permutation kernels


def _require_pair(layout: ModeLayout) -> None:
    if layout.N != 2 or layout.d != 1:
        raise NotImplementedError("partial-permutation kernels are implemented for N=2, d=1")


def _midpoints(values: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Samples at index + 1/2 along each of ``axes``; the last slot is zero."""
    out = values
    for ax in axes:
        mids = _half_shift(out, ax)
        pad = [(0, 0)] * out.ndim
        pad[ax] = (0, 1)
        out = np.pad(mids, pad)
    return out


def partial_permutation_kernel(values: np.ndarray, qgrid: AxisGrid, pgrid: AxisGrid) -> np.ndarray:
    """Unsigned kernel image W' on the input grid (complex in general).

    The a and b integrals run over differences of grid points with x1 + x2
    and y1 + y2 fixed. Whole-index pairs give differences in steps of 2h;
    midpoint samples from band-limited interpolation fill the odd steps, so
    the quadrature spacing is h and the oscillatory phases are resolved up
    to |q1 - q2|, |p1 - p2| < 2 pi / h.
    """
    n, npp = qgrid.n, pgrid.n
    h, hp = qgrid.h, pgrid.h
    qi = np.arange(n)
    pj = np.arange(npp)
    out = np.zeros((n, n, npp, npp), dtype=complex)
    U = np.arange(2 * npp - 1)
    Vx = {0: values, 1: _midpoints(values, [0, 1])}
    for sx in (0, 1):
        for sy in (0, 1):
            V = _midpoints(Vx[sx], [2, 3]) if sy else Vx[sx]
            # y gather: Y[m, l, U] = V[..., l, U - l - sy]
            l = pj[:, None]
            y2 = U[None, :] - l - sy
            ymask = (y2 >= 0) & (y2 < npp)
            y2c = np.clip(y2, 0, npp - 1)
            Dy = (2 * l + sy - U[None, :]) * hp  # (l, U)
            dp = (2 * pj[:, None] - U[None, :]) * hp  # p1 - p2 for output (j1, U)
            # phases split into a T-independent table and a per-T factor
            E1 = np.exp(-2j * h * qi[None, :, None] * Dy.T[:, None, :])  # (U, i1, l)
            E2 = np.exp(1j * ((2 * qi + sx) * h)[None, :, None] * dp.T[:, None, :])  # (U, m, j1)
            jj, uu = np.nonzero((U[None, :] - pj[:, None] >= 0) & (U[None, :] - pj[:, None] < npp))
            for T in range(2 * n - 1):
                m = qi[(qi <= T - sx) & (T - qi - sx < n)]
                if m.size == 0:
                    continue
                G = V[m, T - m - sx]  # (m, y1, y2)
                Y = np.where(ymask, G[:, l, y2c], 0.0) * np.exp(1j * T * h * Dy)  # (m, l, U)
                i1 = qi[(T - qi >= 0) & (T - qi < n)]
                Z = np.matmul(E1[:, i1, :], np.transpose(Y, (2, 1, 0)))  # (U, i1, m)
                R = np.matmul(Z, E2[:, m, :]) * np.exp(-1j * T * h * dp.T)[:, None, :]  # (U, i1, j1)
                out[i1[:, None], (T - i1)[:, None], jj[None, :], (uu - jj)[None, :]] += R[uu[None, :], np.arange(i1.size)[:, None], jj[None, :]]
    return out * (h * hp / TWO_PI)


def wigner_partial_permutation(
    w: WignerGrid, statistics: str | int, i: int = 0, j: int = 1, imag_tol: float = 1e-6
) -> WignerGrid:
    """sign x Wigner function of rho(q_j', q_i'; q_i'', q_j'') computed from W alone.

    For a state with the given statistics the result reproduces ``w``. A
    state that is not exchange symmetric gives a complex image; its
    imaginary part above ``imag_tol`` raises InconsistentInputError.
    """
    _require_pair(w.layout)
    if {i, j} != {0, 1}:
        raise ValueError("particle indices must be 0 and 1")
    sign = statistics_sign(statistics)
    qg, pg = w.qgrids[0], w.pgrids[0]
    if w.qgrids[1] != qg or w.pgrids[1] != pg:
        raise ValueError("both particles must share their q and p grids")
    img = sign * partial_permutation_kernel(w.values, qg, pg)
    resid = float(np.abs(img.imag).max())
    if resid > imag_tol * max(1.0, float(np.abs(img.real).max())):
        raise InconsistentInputError(f"partial-permutation image has imaginary part {resid:.2e}")
    return WignerGrid(w.layout, w.qgrids, w.pgrids, img.real)


def tomogram_partial_permutation(
    t: ComTomogram | Characteristic,
    statistics: str | int,
    qgrid: AxisGrid,
    pgrid: AxisGrid | None = None,
    frames: Sequence[Frame] | CartesianFrames | None = None,
    xgrid: AxisGrid | None = None,
    decay_tol: float = 1e-5,
) -> ComTomogram:
    """Partial permutation through the Wigner picture: com -> W -> kernel -> com.

    ``t`` must sit on a Cartesian frame grid (a ComTomogram or its
    characteristic). The output lives on ``frames`` (default: those of
    ``t``) and ``xgrid`` (default: that of ``t``) and is flagged as signed,
    since a wrong statistics sign produces negative values.
    """
    _require_pair(t.layout)
    w = com_to_wigner(t, (qgrid, qgrid), (pgrid or qgrid,) * 2, decay_tol=decay_tol)
    img = wigner_partial_permutation(w, statistics)
    if frames is None:
        frames = t.cartesian or t.frames
    if xgrid is None:
        if not isinstance(t, ComTomogram):
            raise ValueError("xgrid is required when starting from a characteristic")
        xgrid = t.xgrid
    return wigner_to_com(img, frames, xgrid, signed=True)


def _kernel_characteristic(chi_fn: Callable, alpha: np.ndarray, beta: np.ndarray, half_width: float, n: int):
    """C_K(alpha, beta) for alpha, beta of shape (..., 2): the collapsed-delta kernel integral.

    C_K = (8 pi)^-1 int da db chi(((A + a)/2, (A - a)/2), ((B + b)/2, (B - b)/2))
                         exp(i[a (beta1 - beta2) + b (alpha1 - alpha2)]/4),
    with A, B the component sums of alpha and beta.
    """
    s = np.linspace(-half_width, half_width, n)
    wts = np.full(n, s[1] - s[0])
    wts[[0, -1]] *= 0.5
    A = alpha.sum(-1)[..., None, None]
    B = beta.sum(-1)[..., None, None]
    a = s[:, None]
    b = s[None, :]
    mu = np.stack(np.broadcast_arrays((A + a) / 2, (A - a) / 2), axis=-1)
    nu = np.stack(np.broadcast_arrays((B + b) / 2, (B - b) / 2), axis=-1)
    da = (alpha[..., 0] - alpha[..., 1])[..., None, None]
    db = (beta[..., 0] - beta[..., 1])[..., None, None]
    phase = np.exp(0.25j * (a * db + b * da))
    vals = chi_fn(mu, nu) * phase * wts[:, None] * wts[None, :]
    return vals.sum(axis=(-2, -1)) / (4.0 * TWO_PI)


def regularized_kernel_tomogram(
    chi_fn: Callable,
    statistics: str | int,
    frames: Sequence[Frame],
    xgrid: AxisGrid,
    epsilon: float,
    n_k: int = 160,
    k_max: float | None = None,
    half_width: float = 16.0,
    n_ab: int = 129,
) -> ComTomogram:
    """Direct tomogram-kernel route with a Gaussian exp(-epsilon k^2) regularizer.

    Evaluates sign x (2 pi)^-1 int dk exp(-ikX - epsilon k^2) C_K(k mu', k nu)
    with mu' = (mu2, mu1), which is the image of the tomogram under the
    partial permutation smoothed by a Gaussian of variance 2 epsilon in X.
    ``chi_fn(mu, nu)`` is the state characteristic (modes on the last axis).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    sign = statistics_sign(statistics)
    frames = tuple(frames)
    layout = ModeLayout(N=2, d=1)
    X = xgrid.points
    rows = []
    for f in frames:
        f.require_nondegenerate()
        mu = np.array(f.mu, dtype=float)[::-1]
        nu = np.array(f.nu, dtype=float)
        if k_max is None:
            kk = np.sqrt(-np.log(1e-14) / epsilon)
        else:
            kk = k_max
        k = np.linspace(0.0, kk, n_k)
        wk = np.full(n_k, k[1] - k[0])
        wk[[0, -1]] *= 0.5
        C = _kernel_characteristic(chi_fn, k[:, None] * mu, k[:, None] * nu, half_width, n_ab)
        C = C * np.exp(-epsilon * k**2) * wk
        # real field: combine k and -k
        row = (np.exp(-1j * np.outer(X, k)) @ C).real / np.pi
        rows.append(sign * row)
    return ComTomogram(layout, frames, xgrid, np.array(rows), TOL_COMPOSED, None, signed=True)


def richardson(values: Sequence[np.ndarray]) -> np.ndarray:
    """Extrapolate to epsilon -> 0 from results at epsilon, epsilon/2, epsilon/4.

    The regularizer smooths each row with a Gaussian of variance 2 epsilon,
    so the error expands in integer powers of epsilon; the three-point
    combination cancels the first two orders.
    """
    f1, f2, f4 = (np.asarray(v) for v in values)
    return (8.0 * f4 - 6.0 * f2 + f1) / 3.0


def epsilon_sweep(
    chi_fn: Callable,
    statistics: str | int,
    reference: ComTomogram,
    epsilons: Sequence[float] = (0.1, 0.05, 0.025),
    **kwargs,
) -> dict:
    """Deviation of the regularized kernel route from ``reference`` for each epsilon.

    Returns ``{"epsilons", "deviations", "monotone", "extrapolated"}``; the
    extrapolated deviation is filled in when the epsilons halve successively.
    """
    devs, rows = [], []
    for eps in epsilons:
        direct = regularized_kernel_tomogram(chi_fn, statistics, reference.frames, reference.xgrid, eps, **kwargs)
        rows.append(direct.values)
        devs.append(float(np.abs(direct.values - reference.values).max()))
    extrap = None
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 3 and np.allclose(eps[1:] / eps[:-1], 0.5):
        extrap = float(np.abs(richardson(rows) - reference.values).max())
    monotone = all(b < a for a, b in zip(devs, devs[1:]))
    return {"epsilons": [float(e) for e in epsilons], "deviations": devs, "monotone": monotone, "extrapolated": extrap}


def characteristic_partial_permutation(chi: Characteristic, statistics: str | int, qgrid: AxisGrid, pgrid=None, decay_tol: float = 1e-5) -> Characteristic:
    """Characteristic of the partially permuted state on the same Cartesian frame grid."""
    _require_pair(chi.layout)
    w = com_to_wigner(chi, (qgrid, qgrid), (pgrid or qgrid,) * 2, decay_tol=decay_tol)
    img = wigner_partial_permutation(w, statistics)
    cart = chi.cartesian
    grid = img.values.astype(complex)
    for ax, (src, dst) in enumerate(zip(img.grids, cart.axes)):
        kern = np.exp(1j * np.outer(src.points, dst.points)) * src.weights[:, None]
        grid = np.moveaxis(np.moveaxis(grid, ax, -1) @ kern, -1, ax)
    return Characteristic.from_grid(chi.layout, cart, grid)
