"""Maps between density matrices, Wigner functions, symplectic and center-of-mass tomograms.

The characteristic chi(mu, nu) = <exp(i(mu.q + nu.p))> is the common
intermediate. By homogeneity it equals the unit-frequency Fourier coefficient
of every tomogram slice, and chi(k mu, k nu) is the k-th coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .core import (
    AxisGrid,
    CartesianFrames,
    ComTomogram,
    CoverageError,
    DegenerateFrameError,
    DensityMatrixGrid,
    Frame,
    InconsistentInputError,
    ModeLayout,
    SymplecticTomogram,
    TOL_COMPOSED,
    TOL_TRANSFORM,
    WignerGrid,
    _cell_volume,
    trapezoid,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Characteristic:
    """chi(mu, nu) per frame; ``cartesian`` is set when frames come from a grid."""

    layout: ModeLayout
    frames: tuple
    values: np.ndarray
    cartesian: CartesianFrames | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        values = np.array(self.values, dtype=np.complex128)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.shape != (len(self.frames),):
            raise ValueError("one characteristic value per frame expected")

    def on_grid(self) -> np.ndarray:
        """Values on the Cartesian grid with chi = 1 at the origin."""
        if self.cartesian is None:
            raise ValueError("characteristic is not on a Cartesian frame grid")
        return self.cartesian.scatter(self.values, origin_value=1.0 + 0.0j)

    @classmethod
    def from_grid(cls, layout: ModeLayout, cartesian: CartesianFrames, grid_values) -> "Characteristic":
        grid_values = np.asarray(grid_values)
        mask = cartesian.nondegenerate_mask()
        return cls(layout, cartesian.frame_list(), grid_values[mask], cartesian)


def characteristic_on_grid(layout: ModeLayout, cartesian: CartesianFrames, fn: Callable) -> Characteristic:
    """Sample ``fn(mu, nu)`` (arrays with modes on the last axis) on a frame grid."""
    v = cartesian.vectors
    nd = layout.nd
    return Characteristic.from_grid(layout, cartesian, fn(v[..., :nd], v[..., nd:]))


# ----------------------------------------------------------------------------
# density <-> Wigner


def _check_real(values: np.ndarray, what: str, tol: float = 1e-8) -> np.ndarray:
    scale = max(1.0, float(np.abs(values.real).max()))
    resid = float(np.abs(values.imag).max())
    if resid > tol * scale:
        raise InconsistentInputError(f"{what}: imaginary residue {resid:.3e} exceeds {tol:g}")
    return values.real


def _rho_mode_to_wigner(arr: np.ndarray, g: AxisGrid, pg: AxisGrid) -> np.ndarray:
    """Last two axes (q', q'') -> (q, p) for one mode."""
    n = g.n
    h = g.h
    idx = np.arange(n)
    out = np.zeros(arr.shape[:-2] + (n, pg.n), dtype=complex)
    pref = 2.0 * h / TWO_PI
    for k in range(-(n - 1), n):
        i = idx[(idx + k >= 0) & (idx + k < n) & (idx - k >= 0) & (idx - k < n)]
        if i.size == 0:
            continue
        diag = arr[..., i + k, i - k]
        phase = pref * np.exp(-1j * pg.points * (2 * k * h))
        out[..., i, :] += diag[..., None] * phase
    return out


def density_to_wigner(rho: DensityMatrixGrid, pgrids: Sequence[AxisGrid] | AxisGrid | None = None) -> WignerGrid:
    """W(q, p) = (2 pi)^-Nd int rho(q + u/2, q - u/2) exp(-i p u) du.

    The relative coordinate u = q' - q'' runs on the even grid differences,
    so u has spacing 2h and the q grid of the result equals that of ``rho``.
    """
    nd = rho.layout.nd
    if pgrids is None:
        pgrids = tuple(AxisGrid(g.min, g.max, g.n) for g in rho.qgrids)
    elif isinstance(pgrids, AxisGrid):
        pgrids = (pgrids,) * nd
    arr = rho.values
    # axes: (q'_1..q'_Nd, q''_1..q''_Nd); transform one mode at a time, parking (q_j, p_j) at the end
    for j in range(nd):
        arr = np.moveaxis(arr, (0, nd - j), (-2, -1))
        arr = _rho_mode_to_wigner(arr, rho.qgrids[j], pgrids[j])
    # now axes are (q_1, p_1, q_2, p_2, ...)
    order = [2 * j for j in range(nd)] + [2 * j + 1 for j in range(nd)]
    arr = np.transpose(arr, order)
    return WignerGrid(rho.layout, rho.qgrids, pgrids, _check_real(arr, "Wigner function"))


def _half_shift(values: np.ndarray, axis: int) -> np.ndarray:
    """Band-limited interpolation to midpoints between samples along ``axis``."""
    n = values.shape[axis]
    m = 2 * n
    spec = np.fft.fft(values, n=m, axis=axis)
    freq = np.fft.fftfreq(m)
    shape = [1] * values.ndim
    shape[axis] = freq.size
    spec = spec * np.exp(1j * np.pi * freq).reshape(shape)
    shifted = np.fft.ifft(spec, axis=axis)
    if not np.iscomplexobj(values):
        shifted = shifted.real
    return np.take(shifted, np.arange(n - 1), axis=axis)


def _wigner_mode_to_rho(arr: np.ndarray, g: AxisGrid, pg: AxisGrid) -> np.ndarray:
    """Last two axes (q, p) -> (q', q'') for one mode."""
    n = g.n
    mids = _half_shift(arr, axis=-2)
    fine = np.empty(arr.shape[:-2] + (2 * n - 1, pg.n), dtype=arr.dtype)
    fine[..., 0::2, :] = arr
    fine[..., 1::2, :] = mids
    u = g.h * np.arange(-(n - 1), n)
    kern = np.exp(1j * np.outer(pg.points, u)) * pg.weights[:, None]
    T = fine @ kern  # (..., 2n-1 midpoints, 2n-1 differences)
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]
    return T[..., a + b, a - b + (n - 1)]


def wigner_to_density(w: WignerGrid) -> DensityMatrixGrid:
    """rho(q', q'') = int W((q' + q'')/2, p) exp(i p (q' - q'')) dp on the q grid of ``w``."""
    nd = w.layout.nd
    arr = w.values.astype(complex)
    # axes (q_1..q_Nd, p_1..p_Nd); convert one mode at a time, parking (q'_j, q''_j) at the end
    for j in range(nd):
        arr = np.moveaxis(arr, (0, nd - j), (-2, -1))
        arr = _wigner_mode_to_rho(arr, w.qgrids[j], w.pgrids[j])
    order = [2 * j for j in range(nd)] + [2 * j + 1 for j in range(nd)]
    arr = np.transpose(arr, order)
    arr = 0.5 * (arr + np.conj(np.swapaxes(arr.reshape((np.prod(arr.shape[:nd]),) * 2), 0, 1)).reshape(arr.shape))
    return DensityMatrixGrid(w.layout, w.qgrids, arr)


# ----------------------------------------------------------------------------
# Radon route


def _cells(grids: Sequence[AxisGrid], values: np.ndarray, prune: float = 1e-17):
    """Flattened cell coordinates and trapezoid masses, dropping negligible cells."""
    mass = (values * _cell_volume(grids)).ravel()
    keep = np.abs(mass) > prune * np.abs(mass).max()
    mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
    coords = np.stack([m.ravel()[keep] for m in mesh], axis=1)
    return coords, mass[keep]


def _support(grids, direction) -> tuple[float, float]:
    lo = hi = 0.0
    for g, d in zip(grids, direction):
        a, b = d * g.min, d * g.max
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


def _check_coverage(coords, mass, directions, xgrid: AxisGrid, tol: float):
    for d in directions:
        s = coords @ d
        out = np.abs(mass[(s < xgrid.min) | (s > xgrid.max)]).sum()
        if out > tol:
            raise CoverageError(
                f"frame {tuple(np.round(d, 6))}: mass {out:.2e} projects outside X in [{xgrid.min}, {xgrid.max}]"
            )


def _decay_radius(grids: Sequence[AxisGrid], values: np.ndarray, tol: float = 1e-13) -> float:
    """Radius in frequency space beyond which the grid characteristic is below ``tol``.

    Estimated from the FFT of the samples; returns the grid Nyquist radius
    when the samples do not resolve the decay.
    """
    spec = np.abs(np.fft.fftn(values))
    keep = spec > tol * spec.max()
    freqs = np.meshgrid(*[TWO_PI * np.fft.fftfreq(g.n, g.h) for g in grids], indexing="ij", sparse=True)
    r2 = sum(f**2 for f in freqs)
    return float(np.sqrt(np.max(np.where(keep, r2, 0.0)))) + max(TWO_PI / (g.n * g.h) for g in grids)


def radon_fourier(
    grids: Sequence[AxisGrid],
    values: np.ndarray,
    directions: np.ndarray,
    xgrid: AxisGrid,
    coverage_tol: float = 1e-6,
) -> np.ndarray:
    """Density of s = direction . z under the weight ``values`` on a product grid.

    For each direction the lattice characteristic sum_c m_c exp(i k s_c) is
    evaluated on k = 0, dk, 2dk, ... and resummed as a Fourier series on the
    X grid. The series stops at the smallest of the grid Nyquist frequency,
    the decay radius of the characteristic and the X-grid Nyquist frequency.
    Its period 2 pi / dk exceeds the span of X and of the projected support,
    so no aliasing reaches X.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    coords, mass = _cells(grids, values)
    _check_coverage(coords, mass, directions, xgrid, coverage_tol)
    steps = np.array([g.h for g in grids])
    radius = _decay_radius(grids, values)
    n_f = directions.shape[0]
    dk = np.empty(n_f)
    n_k = np.empty(n_f, dtype=np.int64)
    n_fft = np.empty(n_f, dtype=np.int64)
    for f, d in enumerate(directions):
        reach = float(np.max(np.abs(d) * steps))
        if reach == 0.0:
            raise DegenerateFrameError("direction is zero")
        k_max = min(np.pi / reach, radius / float(np.linalg.norm(d)))
        s_lo, s_hi = _support(grids, d)
        period = 1.05 * max(xgrid.max - s_lo, s_hi - xgrid.min, xgrid.max - xgrid.min)
        n_fft[f] = int(np.ceil(period / xgrid.h))
        dk[f] = TWO_PI / (n_fft[f] * xgrid.h)
        n_k[f] = min(int(k_max / dk[f]) + 2, n_fft[f] // 2)
    chi = _kernels.ray_characteristic(coords, mass, directions, dk, n_k)
    out = np.empty((n_f, xgrid.n))
    for f in range(n_f):
        m = np.arange(n_k[f])
        a = np.zeros(n_fft[f], dtype=complex)
        a[: n_k[f]] = chi[f, : n_k[f]] * np.exp(-1j * m * dk[f] * xgrid.min)
        series = 2.0 * np.fft.fft(a)[: xgrid.n].real - chi[f, 0].real
        out[f] = dk[f] / TWO_PI * series
    return out


def radon_binning(
    grids: Sequence[AxisGrid],
    values: np.ndarray,
    directions: np.ndarray,
    xgrid: AxisGrid,
    coverage_tol: float = 1e-6,
) -> np.ndarray:
    """Linear-split histogram of s = direction . z followed by a [1/4, 1/2, 1/4] smoothing pass."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    coords, mass = _cells(grids, values)
    out = np.empty((directions.shape[0], xgrid.n))
    for f, d in enumerate(directions):
        hist, outside = _kernels.radon_bin(coords @ d, mass, xgrid.min, xgrid.h, xgrid.n)
        if abs(outside) > coverage_tol:
            raise CoverageError(f"frame {tuple(np.round(d, 6))}: mass {outside:.2e} outside the X grid")
        dens = hist / xgrid.h
        dens[0] *= 2.0  # end bins collect half-width cells
        dens[-1] *= 2.0
        sm = np.convolve(np.pad(dens, 1), [0.25, 0.5, 0.25], mode="valid")
        out[f] = sm
    return out


_RADON = {"fourier": radon_fourier, "binning": radon_binning}


def _clip_negative(values: np.ndarray, tol: float) -> np.ndarray:
    """Zero round-off negatives; larger negatives mean the input is not a state."""
    low = values.min() if values.size else 0.0
    if low < -tol:
        raise InconsistentInputError(f"tomogram has negative values down to {low:.2e}")
    return np.maximum(values, 0.0)


def wigner_to_com(
    w: WignerGrid,
    frames: Sequence[Frame] | CartesianFrames,
    xgrid: AxisGrid,
    method: str = "fourier",
    signed: bool = False,
    negativity_tol: float = 1e-6,
) -> ComTomogram:
    """Tomogram w(X, mu, nu) as the marginal of W along mu.q + nu.p = X."""
    cartesian = frames if isinstance(frames, CartesianFrames) else None
    frames = tuple(frames.frame_list() if cartesian else frames)
    for f in frames:
        f.require_nondegenerate()
    directions = np.array([f.vector for f in frames])
    vals = _RADON[method](w.grids, w.values, directions, xgrid)
    if not signed:
        vals = _clip_negative(vals, negativity_tol)
    return ComTomogram(w.layout, frames, xgrid, vals, TOL_COMPOSED, cartesian, signed)


def wigner_characteristic(w: WignerGrid, frames: Sequence[Frame] | CartesianFrames) -> Characteristic:
    """chi(mu, nu) = int W exp(i(mu.q + nu.p)) dq dp by the lattice sum."""
    cartesian = frames if isinstance(frames, CartesianFrames) else None
    frames = tuple(frames.frame_list() if cartesian else frames)
    coords, mass = _cells(w.grids, w.values)
    directions = np.array([f.vector for f in frames])
    chi = _kernels.ray_characteristic(coords, mass, directions, np.ones(len(frames)), 2)[:, 1]
    return Characteristic(w.layout, frames, chi, cartesian)


def com_from_characteristic(
    layout: ModeLayout,
    chi_fn: Callable,
    frames: Sequence[Frame] | CartesianFrames,
    xgrid: AxisGrid,
    signed: bool = False,
    coverage_tol: float = TOL_TRANSFORM,
) -> ComTomogram:
    """Rows w(X) = (2 pi)^-1 int chi(k mu, k nu) exp(-ikX) dk from a characteristic callable.

    ``chi_fn(mu, nu)`` takes arrays with the Nd modes on the last axis. The
    k series has period twice the X span and stops at the X-grid Nyquist
    frequency; a row whose integral over X misses 1 by more than
    ``coverage_tol`` raises CoverageError.
    """
    cartesian = frames if isinstance(frames, CartesianFrames) else None
    frames = tuple(frames.frame_list() if cartesian else frames)
    nd = layout.nd
    n_fft = 2 * (xgrid.n - 1)
    dk = TWO_PI / (n_fft * xgrid.h)
    n_k = n_fft // 2
    k = dk * np.arange(n_k)
    vecs = np.array([f.vector for f in frames])
    pts = k[None, :, None] * vecs[:, None, :]
    chi = np.asarray(chi_fn(pts[..., :nd], pts[..., nd:]), dtype=complex)
    a = np.zeros((len(frames), n_fft), dtype=complex)
    a[:, :n_k] = chi * np.exp(-1j * k * xgrid.min)
    series = 2.0 * np.fft.fft(a, axis=1)[:, : xgrid.n].real - chi[:, :1].real
    vals = dk / TWO_PI * series
    mass = trapezoid(vals, xgrid)
    bad = np.abs(mass - chi[:, 0].real)
    if bad.size and bad.max() > coverage_tol:
        f = int(np.argmax(bad))
        raise CoverageError(f"frame {frames[f]}: row integrates to {mass[f]:.6f}; X grid too narrow or coarse")
    if not signed:
        vals = _clip_negative(vals, 1e-6)
    return ComTomogram(layout, frames, xgrid, vals, TOL_TRANSFORM, cartesian, signed)


def com_to_characteristic(t: ComTomogram) -> Characteristic:
    """chi(mu, nu) = int w(X, mu, nu) exp(iX) dX per frame (trapezoid rule)."""
    chi = trapezoid(t.values * np.exp(1j * t.xgrid.points), t.xgrid)
    return Characteristic(t.layout, t.frames, chi, t.cartesian)


def _axis_dft(arr: np.ndarray, axis: int, src: AxisGrid, dst: AxisGrid) -> np.ndarray:
    """int arr(m) exp(-i m x) dm along ``axis`` for x on ``dst``."""
    kern = np.exp(-1j * np.outer(src.points, dst.points)) * src.weights[:, None]
    moved = np.moveaxis(arr, axis, -1) @ kern
    return np.moveaxis(moved, -1, axis)


def _boundary_max(arr: np.ndarray) -> float:
    best = 0.0
    for ax in range(arr.ndim):
        for end in (0, -1):
            best = max(best, float(np.abs(np.take(arr, end, axis=ax)).max()))
    return best


def com_to_wigner(
    t: ComTomogram | Characteristic,
    qgrids: Sequence[AxisGrid] | AxisGrid,
    pgrids: Sequence[AxisGrid] | AxisGrid | None = None,
    decay_tol: float = 1e-5,
) -> WignerGrid:
    """W(q, p) = (2 pi)^-2Nd int chi(mu, nu) exp(-i(mu.q + nu.p)) dmu dnu.

    ``t`` must live on a CartesianFrames grid with every mu and nu component
    active. The characteristic must have decayed below ``decay_tol`` on the
    grid boundary.
    """
    chi = t if isinstance(t, Characteristic) else com_to_characteristic(t)
    cart = chi.cartesian
    if cart is None:
        raise ValueError("com_to_wigner needs frames on a Cartesian (mu, nu) grid")
    if any(a is None for a in cart.mu_axes + cart.nu_axes):
        raise ValueError("every mu and nu component must be sampled")
    if cart.origin_index is None:
        raise ValueError("the frame grid must contain the origin")
    nd = chi.layout.nd
    if isinstance(qgrids, AxisGrid):
        qgrids = (qgrids,) * nd
    if pgrids is None:
        pgrids = qgrids
    elif isinstance(pgrids, AxisGrid):
        pgrids = (pgrids,) * nd
    arr = chi.on_grid()
    edge = _boundary_max(arr)
    if edge > decay_tol:
        raise CoverageError(f"characteristic is {edge:.2e} on the frame-grid boundary (tolerance {decay_tol:g})")
    out_grids = tuple(qgrids) + tuple(pgrids)
    for ax, (src, dst) in enumerate(zip(cart.axes, out_grids)):
        arr = _axis_dft(arr, ax, src, dst)
    W = arr / TWO_PI ** (2 * nd)
    return WignerGrid(chi.layout, qgrids, pgrids, _check_real(W, "Wigner function", tol=1e-6))


# ----------------------------------------------------------------------------
# symplectic tomograms


def symplectic_to_com(
    ws: SymplecticTomogram,
    xgrid: AxisGrid,
    method: str = "fourier",
) -> ComTomogram:
    """w(X, mu, nu) = int w_s(Y, mu, nu) delta(X - sum_j Y_j) dY."""
    ones = np.ones((1, ws.layout.nd))
    rows = [_RADON[method](ws.ygrids, ws.values[f], ones, xgrid)[0] for f in range(len(ws.frames))]
    vals = np.array(rows)
    if not ws.signed:
        vals = _clip_negative(vals, 1e-6)
    return ComTomogram(ws.layout, ws.frames, xgrid, vals, TOL_COMPOSED, None, ws.signed)


def symplectic_ray_frames(frame: Frame, kgrids: Sequence[AxisGrid]) -> list:
    """Frames (k o mu, k o nu) for k on the product grid, origin excluded."""
    mesh = np.meshgrid(*[g.points for g in kgrids], indexing="ij")
    ks = np.stack([m.ravel() for m in mesh], axis=1)
    mu, nu = np.array(frame.mu), np.array(frame.nu)
    out = []
    for k in ks:
        f = Frame(k * mu, k * nu)
        if not f.is_degenerate:
            out.append(f)
    return out


def _lookup(t: ComTomogram, chi: np.ndarray):
    table = {tuple(np.round(f.vector, 12)): c for f, c in zip(t.frames, chi)}

    def get(v):
        key = tuple(np.round(v, 12))
        if key not in table:
            raise CoverageError(f"tomogram lacks the ray frame {key}")
        return table[key]

    return get


def com_to_symplectic(
    t: ComTomogram,
    frames: Sequence[Frame],
    kgrids: Sequence[AxisGrid],
    ygrids: Sequence[AxisGrid],
) -> SymplecticTomogram:
    """w_s(Y, mu, nu) = (2 pi)^-Nd int chi(k o mu, k o nu) exp(-i k.Y) dk.

    ``t`` must contain every frame returned by :func:`symplectic_ray_frames`
    for each target frame. The (2 pi)^-Nd factor makes the single-mode case
    the identity.
    """
    nd = t.layout.nd
    if len(kgrids) != nd or len(ygrids) != nd:
        raise ValueError("need one k grid and one Y grid per degree of freedom")
    get = _lookup(t, com_to_characteristic(t).values)
    mesh = np.meshgrid(*[g.points for g in kgrids], indexing="ij")
    ks = np.stack([m.ravel() for m in mesh], axis=1)
    out = []
    for frame in frames:
        mu, nu = np.array(frame.mu), np.array(frame.nu)
        vals = np.empty(len(ks), dtype=complex)
        for i, k in enumerate(ks):
            v = np.concatenate([k * mu, k * nu])
            vals[i] = 1.0 if not np.any(v) else get(v)
        arr = vals.reshape(tuple(g.n for g in kgrids))
        for ax, (src, dst) in enumerate(zip(kgrids, ygrids)):
            arr = _axis_dft(arr, ax, src, dst)
        out.append(_check_real(arr / TWO_PI**nd, "symplectic tomogram", tol=1e-6))
    return SymplecticTomogram(t.layout, frames, ygrids, np.array(out), signed=True)


def symplectic_from_wigner(w: WignerGrid, frames: Sequence[Frame], ygrids: Sequence[AxisGrid], kgrids=None) -> SymplecticTomogram:
    """w_s on ``ygrids`` through the characteristic of W on each ray family."""
    nd = w.layout.nd
    if kgrids is None:
        kgrids = tuple(AxisGrid.symmetric(np.pi / g.h, g.n) for g in ygrids)
    out = []
    for frame in frames:
        rays = symplectic_ray_frames(frame, kgrids)
        chi = wigner_characteristic(w, rays).values
        cart = CartesianFrames(kgrids, (None,) * nd)
        arr = cart.scatter(chi, origin_value=1.0 + 0.0j)
        for ax, (src, dst) in enumerate(zip(kgrids, ygrids)):
            arr = _axis_dft(arr, ax, src, dst)
        out.append(_check_real(arr / TWO_PI**nd, "symplectic tomogram", tol=1e-6))
    return SymplecticTomogram(w.layout, frames, ygrids, np.array(out), signed=True)


# ----------------------------------------------------------------------------
# pure states


def _frft_amplitude(psi_vals, q: AxisGrid, mu: float, nu: float, Y) -> np.ndarray:
    """(2 pi |nu|)^-1/2 int psi(q) exp(i mu q^2 / (2 nu) - i q Y / nu) dq."""
    Y = np.asarray(Y, dtype=float)
    x = q.points
    chirp = psi_vals * np.exp(0.5j * mu / nu * x**2) * q.weights
    ph = np.exp(-1j * np.multiply.outer(Y, x) / nu)
    return (ph @ chirp) / np.sqrt(TWO_PI * abs(nu))


def _default_qgrid(mu: float, nu: float, xmax: float, half_width: float = 9.0) -> AxisGrid:
    rate = abs(mu / nu) * half_width + xmax / abs(nu)
    h = min(0.05, 0.5 / max(rate, 1e-12))
    n = int(np.ceil(2 * half_width / h)) + 1
    return AxisGrid.symmetric(half_width, n)


def pure_state_tomogram(
    psi: Callable | Sequence[Callable],
    frame: Frame,
    xgrid: AxisGrid,
    qgrid: AxisGrid | None = None,
) -> np.ndarray:
    """Tomogram profile of a pure state from its wave function.

    ``psi`` is either a list of per-mode callables (product state) or one
    callable taking an array whose last axis holds the Nd coordinates. Each
    mode contributes the fractional-Fourier density
    (2 pi |nu_j|)^-1 |int psi_j(q) exp(i mu_j q^2/(2 nu_j) - i q Y_j/nu_j) dq|^2
    and the modes are combined by convolution along X = sum_j Y_j.
    """
    frame.require_nondegenerate()
    mu, nu = np.array(frame.mu), np.array(frame.nu)
    nd = mu.size
    if np.any(nu == 0):
        raise DegenerateFrameError("pure-state route needs every nu_j != 0; use the Wigner route (wigner_to_com) instead")
    X = xgrid.points
    xmax = float(np.abs(X).max())
    grids = [qgrid or _default_qgrid(mu[j], nu[j], xmax) for j in range(nd)]
    h = xgrid.h

    if callable(psi):
        if nd == 1:
            vals = psi(grids[0].points[:, None])
            return np.abs(_frft_amplitude(vals, grids[0], mu[0], nu[0], X)) ** 2
        if nd != 2:
            raise ValueError("non-product wave functions are supported for Nd <= 2")
        g1, g2 = grids
        Q1, Q2 = np.meshgrid(g1.points, g2.points, indexing="ij")
        vals = psi(np.stack([Q1, Q2], axis=-1))
        y = h * np.arange(-int(np.ceil(xmax / h)) - 60, int(np.ceil(xmax / h)) + 61)
        # transform along q1 for every Y1, then along q2 at Y2 = X - Y1
        chirp1 = np.exp(0.5j * mu[0] / nu[0] * g1.points**2) * g1.weights
        G = (np.exp(-1j * np.outer(y, g1.points) / nu[0]) * chirp1) @ vals  # (nY, nq2)
        G = G * (np.exp(0.5j * mu[1] / nu[1] * g2.points**2) * g2.weights)
        norm = 1.0 / (TWO_PI * np.sqrt(abs(nu[0] * nu[1])))
        out = np.empty(X.size)
        for i, x in enumerate(X):
            ph = np.exp(-1j * np.outer(x - y, g2.points) / nu[1])
            amp = np.sum(G * ph, axis=1) * norm
            out[i] = h * np.sum(np.abs(amp) ** 2)
        return out

    psi = list(psi)
    if len(psi) != nd:
        raise ValueError("need one wave function per mode")
    dens = [lambda Y, j=j: np.abs(_frft_amplitude(psi[j](grids[j].points), grids[j], mu[j], nu[j], Y)) ** 2 for j in range(nd)]
    if nd == 1:
        return dens[0](X)
    pad = int(np.ceil(xmax / h)) + 60
    y = h * np.arange(-pad * (nd - 1), pad * (nd - 1) + 1)
    acc = dens[0](y)
    for j in range(1, nd - 1):
        acc = h * np.convolve(acc, dens[j](y), mode="same")
    last = dens[-1](X[:, None] - y[None, :])
    return h * np.sum(acc * last, axis=1)


# ----------------------------------------------------------------------------
# helpers


def analytic_com(state, frames: Sequence[Frame] | CartesianFrames, xgrid: AxisGrid, layout: ModeLayout | None = None) -> ComTomogram:
    """Sample a closed-form tomogram from ``states`` on every frame."""
    from .states import analytic_tomogram

    cartesian = frames if isinstance(frames, CartesianFrames) else None
    frames = tuple(frames.frame_list() if cartesian else frames)
    layout = layout or ModeLayout.modes(state.nd)
    vals = np.array([analytic_tomogram(state, f, xgrid.points) for f in frames])
    return ComTomogram(layout, frames, xgrid, vals, TOL_TRANSFORM, cartesian)
