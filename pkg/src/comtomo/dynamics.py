"""Evolution, stationary-state and transition equations for center-of-mass tomograms.

Tomograms are handled in the spectral X-representation

    w_hat(k; mu, nu) = int w(X, mu, nu) exp(-ikX) dX = chi(-k mu, -k nu),

in which d/dX acts as multiplication by ik and its inverse as 1/(ik). The
frame derivatives d/dmu_j and d/dnu_j are fourth-order central differences
on a Cartesian frame grid. Each k-mode obeys its own copy of every equation,
so a handful of nonzero k values suffices for residual checks.

Position-like operators enter through the commuting pair

    A_j = -d/dmu_j (d/dX)^-1,    Bt_j = (nu_j / 2) d/dX,

with q_j -> A_j and (i/2) d/dp_j -> i Bt_j. Expanding V(A + i Bt) and sorting
terms by the parity of the Bt power gives ReV (even) and ImV (odd, divided by i).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import comb
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.ndimage import map_coordinates

from ._fd import derivative
from .core import (
    AxisGrid,
    CartesianFrames,
    ComTomogram,
    InconsistentInputError,
    ModeLayout,
    WignerGrid,
)
from .transforms import Characteristic, TWO_PI

TRUST_FRACTION = 0.6


# ----------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PolynomialPotential:
    """V(q) = sum_alpha c_alpha q^alpha with total degree at most 4."""

    coefficients: Mapping
    nd: int = 1

    def __post_init__(self):
        coeffs = {}
        for key, c in dict(self.coefficients).items():
            if isinstance(key, str):
                key = tuple(int(v) for v in key.split(",") if v.strip())
            key = tuple(int(v) for v in np.atleast_1d(key))
            if len(key) != self.nd:
                raise ValueError(f"multi-index {key} does not have {self.nd} entries")
            if min(key) < 0:
                raise ValueError("multi-index entries must be non-negative")
            if float(c) != 0.0:
                coeffs[key] = coeffs.get(key, 0.0) + float(c)
        if coeffs and max(sum(k) for k in coeffs) > 4:
            raise ValueError("potential degree is capped at 4")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.coefficients), default=0)

    @classmethod
    def harmonic(cls, omega: Sequence[float] = (1.0,), masses: Sequence[float] | None = None) -> "PolynomialPotential":
        omega = list(np.atleast_1d(omega))
        nd = len(omega)
        masses = list(masses) if masses is not None else [1.0] * nd
        coeffs = {}
        for j in range(nd):
            key = [0] * nd
            key[j] = 2
            coeffs[tuple(key)] = 0.5 * masses[j] * omega[j] ** 2
        return cls(coeffs, nd)

    @classmethod
    def free(cls, nd: int = 1) -> "PolynomialPotential":
        return cls({}, nd)

    def __call__(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape[:-1])
        for key, c in self.coefficients.items():
            out = out + c * np.prod(q**np.array(key), axis=-1)
        return out

    def quadratic_parts(self) -> tuple[np.ndarray, np.ndarray]:
        """(g, K) with V = const + g.q + q.K.q / 2; raises for degree > 2."""
        if self.degree > 2:
            raise ValueError("exact Moyal flow needs a potential of degree <= 2")
        g = np.zeros(self.nd)
        K = np.zeros((self.nd, self.nd))
        for key, c in self.coefficients.items():
            idx = [j for j, a in enumerate(key) for _ in range(a)]
            if len(idx) == 1:
                g[idx[0]] += c
            elif len(idx) == 2:
                i, j = idx
                if i == j:
                    K[i, i] += 2.0 * c
                else:
                    K[i, j] += c
                    K[j, i] += c
        return g, K

    def to_dict(self) -> dict:
        return {",".join(map(str, k)): c for k, c in self.coefficients.items()}

    @classmethod
    def from_dict(cls, data: Mapping, nd: int) -> "PolynomialPotential":
        return cls(dict(data), nd)


@dataclass(frozen=True)
class OperatorTerm:
    """coefficient * prod_j A_j^a_j Bt_j^b_j."""

    coefficient: float
    a: tuple
    b: tuple


def potential_operator_terms(V: PolynomialPotential) -> tuple[list, list]:
    """Split V(A + i Bt) into (ReV, ImV) term lists with real coefficients."""
    re_terms: dict = {}
    im_terms: dict = {}
    for alpha, c in V.coefficients.items():
        for bs in product(*[range(a + 1) for a in alpha]):
            coeff = c * np.prod([comb(a, b) for a, b in zip(alpha, bs)])
            nb = sum(bs)
            key = (tuple(a - b for a, b in zip(alpha, bs)), tuple(bs))
            # i^nb: even powers give +-1, odd powers give +-i
            sign = (-1) ** (nb // 2)
            target = re_terms if nb % 2 == 0 else im_terms
            target[key] = target.get(key, 0.0) + sign * coeff
    pack = lambda d: [OperatorTerm(v, k[0], k[1]) for k, v in d.items() if v != 0.0]
    return pack(re_terms), pack(im_terms)


# ----------------------------------------------------------------------------
# tomogram fields


def default_kgrid(k_max: float = 1.0, n: int = 4) -> np.ndarray:
    """Symmetric nonzero k values +-k_max/n, ..., +-k_max."""
    pos = k_max * np.arange(1, n + 1) / n
    return np.concatenate([-pos[::-1], pos])


@dataclass(frozen=True)
class TomogramField:
    """w_hat(k; mu, nu) on a Cartesian frame grid (all 2Nd axes active) times a k grid.

    ``values`` has shape ``frames.shape + (len(k),)``. The k = 0 mode is the
    normalization, fixed at 1, and is not stored.
    """

    layout: ModeLayout
    frames: CartesianFrames
    k: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if any(a is None for a in self.frames.mu_axes + self.frames.nu_axes):
            raise ValueError("tomogram fields need every mu and nu component on the grid")
        k = np.array(self.k, dtype=float)
        if np.any(k == 0.0):
            raise ValueError("the k grid must exclude k = 0")
        if not np.allclose(np.sort(k), -np.sort(k)[::-1]):
            raise ValueError("the k grid must be symmetric about 0")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)
        values = np.array(self.values, dtype=complex)
        if values.shape != self.frames.shape + (k.size,):
            raise ValueError("values shape must be frames.shape + (len(k),)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nd(self) -> int:
        return self.layout.nd

    def with_values(self, values) -> "TomogramField":
        return TomogramField(self.layout, self.frames, self.k, values)

    def mu(self, j: int) -> np.ndarray:
        return self.frames.vectors[..., j][..., None]

    def nu(self, j: int) -> np.ndarray:
        return self.frames.vectors[..., self.nd + j][..., None]

    @classmethod
    def from_characteristic(cls, layout: ModeLayout, frames: CartesianFrames, k, fn: Callable) -> "TomogramField":
        """Build from a callable chi(mu, nu) with modes on the last axis."""
        k = np.asarray(k, dtype=float)
        v = frames.vectors
        nd = layout.nd
        vals = np.stack([fn(-kk * v[..., :nd], -kk * v[..., nd:]) for kk in k], axis=-1)
        return cls(layout, frames, k, vals)

    @classmethod
    def from_wigner(cls, w: WignerGrid, frames: CartesianFrames, k) -> "TomogramField":
        """w_hat(k; mu, nu) = int W exp(-ik(mu.q + nu.p)) dq dp by separable quadrature."""
        k = np.asarray(k, dtype=float)
        out = []
        for kk in k:
            arr = w.values.astype(complex)
            for ax, (src, dst) in enumerate(zip(w.grids, frames.axes)):
                kern = np.exp(-1j * kk * np.outer(src.points, dst.points)) * src.weights[:, None]
                arr = np.moveaxis(np.moveaxis(arr, ax, -1) @ kern, -1, ax)
            out.append(arr)
        return cls(w.layout, frames, k, np.stack(out, axis=-1))

    @classmethod
    def from_com(cls, t: ComTomogram, k) -> "TomogramField":
        """Spectral field of a tomogram sampled on Cartesian frames (origin set to 1)."""
        if t.cartesian is None:
            raise ValueError("tomogram frames must come from a CartesianFrames grid")
        k = np.asarray(k, dtype=float)
        ph = np.exp(-1j * np.outer(t.xgrid.points, k)) * t.xgrid.weights[:, None]
        per_frame = t.values @ ph
        return cls(t.layout, t.cartesian, k, t.cartesian.scatter(per_frame, origin_value=1.0 + 0.0j))

    def to_x(self, xgrid: AxisGrid) -> np.ndarray:
        """Approximate w(X) from the stored modes (only meaningful for a fine, wide k grid)."""
        dk = np.min(np.abs(np.diff(np.sort(self.k))))
        ph = np.exp(1j * np.outer(self.k, xgrid.points))
        return (dk / TWO_PI) * (1.0 + (self.values @ ph)).real

    def characteristic(self, index: int) -> Characteristic:
        """Characteristic values at k[index] (chi at frames -k (mu, nu))."""
        return Characteristic.from_grid(self.layout, self.frames, self.values[..., index])


def apply_inverse_x_derivative(f: TomogramField, power: int = 1) -> TomogramField:
    """Multiply by (ik)^-power; the k = 0 normalization mode is not part of the field."""
    if power < 1:
        raise ValueError("power must be >= 1")
    return f.with_values(f.values / (1j * f.k) ** power)


def apply_x_derivative(f: TomogramField, power: int = 1) -> TomogramField:
    return f.with_values(f.values * (1j * f.k) ** power)


def frame_derivative(f: TomogramField, component: int, order: int = 1) -> np.ndarray:
    """d^order/d(frame component)^order; components 0..Nd-1 are mu, Nd..2Nd-1 are nu."""
    axis_grid = f.frames.axes[component]
    return derivative(f.values, component, axis_grid.h, order)


def trust_region(frames: CartesianFrames, fraction: float = TRUST_FRACTION) -> np.ndarray:
    """Boolean mask of the inner ``fraction`` of each frame axis."""
    masks = []
    for a in frames.axes:
        c = 0.5 * (a.min + a.max)
        half = 0.5 * fraction * (a.max - a.min)
        masks.append(np.abs(a.points - c) <= half + 1e-12 * (a.max - a.min))
    out = masks[0]
    for m in masks[1:]:
        out = np.multiply.outer(out, m)
    return out


def _apply_term(f: TomogramField, term: OperatorTerm) -> np.ndarray:
    vals = f.values * term.coefficient
    ik = 1j * f.k
    for j, b in enumerate(term.b):
        if b:
            vals = vals * (0.5 * f.nu(j) * ik) ** b
    for j, a in enumerate(term.a):
        if a:
            vals = derivative(vals, j, f.frames.axes[j].h, a) * (-1.0 / ik) ** a
    return vals


def apply_potential(f: TomogramField, terms: Sequence[OperatorTerm]) -> np.ndarray:
    out = np.zeros_like(f.values)
    for t in terms:
        out = out + _apply_term(f, t)
    return out


def kinetic_real(f: TomogramField, masses: Sequence[float]) -> np.ndarray:
    """sum_j [(1/2m_j) d2/dnu_j^2 (d/dX)^-2 - (1/8m_j) mu_j^2 d2/dX^2] w."""
    ik = 1j * f.k
    out = np.zeros_like(f.values)
    for j, m in enumerate(masses):
        d2 = frame_derivative(f, f.nd + j, 2)
        out = out + d2 / ik**2 / (2.0 * m) - f.mu(j) ** 2 * ik**2 * f.values / (8.0 * m)
    return out


def drift(f: TomogramField, masses: Sequence[float], scale: float = 1.0) -> np.ndarray:
    """sum_j scale * (mu_j / m_j) dw/dnu_j."""
    out = np.zeros_like(f.values)
    for j, m in enumerate(masses):
        out = out + scale * f.mu(j) / m * frame_derivative(f, f.nd + j, 1)
    return out


@dataclass(frozen=True)
class ResidualReport:
    equation: str
    grid: dict
    trust_region: float
    residual_real: float
    residual_imag: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.residual_real, self.residual_imag) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "grid": self.grid,
            "trust_region": self.trust_region,
            "residual_real": self.residual_real,
            "residual_imag": self.residual_imag,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _interior_max(values: np.ndarray, frames: CartesianFrames) -> float:
    mask = trust_region(frames)
    sel = values[mask]
    if np.isnan(sel).any():
        raise ValueError("frame grid too small: stencils reach outside the trust region")
    return float(np.abs(sel).max()) if sel.size else 0.0


def _masses(f: TomogramField, masses) -> tuple:
    m = tuple(f.layout.masses) if masses is None else tuple(np.atleast_1d(masses).astype(float))
    if len(m) != f.nd:
        raise ValueError("one mass per degree of freedom expected")
    return m


def _check_same(*fields: TomogramField):
    ref = fields[0]
    for f in fields[1:]:
        if f.frames != ref.frames or not np.array_equal(f.k, ref.k):
            raise ValueError("fields must share frame and k grids")


def _grid_info(f: TomogramField) -> dict:
    return {"frames": f.frames.to_dict(), "k": f.k.tolist()}


def evolution_terms(f: TomogramField, V: PolynomialPotential, masses=None) -> np.ndarray:
    """-sum (mu/m) dw/dnu + i[V(A + i Bt) - V(A - i Bt)] w = -sum (mu/m) dw/dnu - 2 ImV w."""
    m = _masses(f, masses)
    _, im_terms = potential_operator_terms(V)
    return -drift(f, m) - 2.0 * apply_potential(f, im_terms)


def evolution_residual(
    fields: Sequence[TomogramField],
    V: PolynomialPotential,
    h: float,
    masses=None,
    tolerance: float = 1e-3,
) -> ResidualReport:
    """Residual of dw/dt - sum (mu/m) dw/dnu + i[V(..+..) - V(..-..)] w = 0 at the middle slice."""
    if h <= 0:
        raise ValueError("h must be positive")
    before, now, after = fields
    _check_same(before, now, after)
    dt = (after.values - before.values) / (2.0 * h)
    total = dt + evolution_terms(now, V, masses)
    r = _interior_max(total, now.frames)
    return ResidualReport("evolution", _grid_info(now), TRUST_FRACTION, r, 0.0, tolerance)


def eigen_lines(f: TomogramField, V: PolynomialPotential, masses=None) -> tuple[np.ndarray, np.ndarray]:
    """(kinetic + ReV) w and (-sum mu/(2m) dw/dnu - ImV w)."""
    m = _masses(f, masses)
    re_terms, im_terms = potential_operator_terms(V)
    real_line = kinetic_real(f, m) + apply_potential(f, re_terms)
    imag_line = -drift(f, m, 0.5) - apply_potential(f, im_terms)
    return real_line, imag_line


def eigen_residual(
    f: TomogramField,
    V: PolynomialPotential,
    E: float,
    masses=None,
    tolerance: float = 1e-4,
) -> ResidualReport:
    """Both lines of the stationary-state equation for the tomogram."""
    real_line, imag_line = eigen_lines(f, V, masses)
    rr = _interior_max(real_line - E * f.values, f.frames)
    ri = _interior_max(imag_line, f.frames)
    return ResidualReport("eigen", _grid_info(f), TRUST_FRACTION, rr, ri, tolerance)


def energy_scan(f: TomogramField, V: PolynomialPotential, energies, masses=None) -> np.ndarray:
    """Real-line residual for each candidate energy."""
    real_line, _ = eigen_lines(f, V, masses)
    return np.array([_interior_max(real_line - E * f.values, f.frames) for E in energies])


def oscillator_log_z_derivative(omega: Sequence[float], beta: float) -> float:
    """d ln Z / d beta for independent oscillators: -sum_j (omega_j/2) coth(beta omega_j / 2)."""
    w = np.asarray(omega, dtype=float)
    return float(-np.sum(0.5 * w / np.tanh(0.5 * beta * w)))


def imaginary_time_residual(
    fields: Sequence[TomogramField],
    V: PolynomialPotential,
    h: float,
    masses=None,
    log_z_derivative: float = 0.0,
    tolerance: float = 1e-3,
) -> ResidualReport:
    """Residual of -dw/dbeta = (kinetic + ReV) w and its companion line.

    For normalized states w = w_unnorm / Z the left side picks up
    -(d ln Z/d beta) w; pass that derivative as ``log_z_derivative``.
    """
    before, now, after = fields
    _check_same(before, now, after)
    dbeta = (after.values - before.values) / (2.0 * h)
    real_line, imag_line = eigen_lines(now, V, masses)
    total = -dbeta - log_z_derivative * now.values - real_line
    rr = _interior_max(total, now.frames)
    ri = _interior_max(imag_line, now.frames)
    return ResidualReport("imaginary_time", _grid_info(now), TRUST_FRACTION, rr, ri, tolerance)


# ----------------------------------------------------------------------------
# transitions


def transition_probability(a: Characteristic, b: Characteristic, imag_tol: float = 1e-8) -> float:
    """P_ab = (2 pi)^-Nd int chi_a(mu, nu) chi_b(-mu, -nu) dmu dnu on a shared symmetric grid."""
    if a.cartesian is None or a.cartesian != b.cartesian:
        raise ValueError("characteristics must share a Cartesian frame grid")
    cart = a.cartesian
    if any(x is None for x in cart.mu_axes + cart.nu_axes):
        raise ValueError("every mu and nu component must be sampled")
    if not all(ax.is_symmetric for ax in cart.axes):
        raise ValueError("frame grid must be symmetric about the origin")
    ca = a.on_grid()
    cb = b.on_grid()
    flipped = cb[(slice(None, None, -1),) * cb.ndim]
    vol = np.ones(())
    for ax in cart.axes:
        vol = np.multiply.outer(vol, ax.weights)
    total = np.sum(ca * flipped * vol) / TWO_PI ** a.layout.nd
    if abs(total.imag) > imag_tol * max(1.0, abs(total.real)):
        raise InconsistentInputError(f"transition probability has imaginary part {total.imag:.2e}")
    return float(total.real)


# ----------------------------------------------------------------------------
# exact flow for quadratic potentials


def quadratic_flow(V: PolynomialPotential, masses: Sequence[float], t: float) -> tuple[np.ndarray, np.ndarray]:
    """Affine map z -> Mz + c of the Hamiltonian flow over time t, z = (q, p)."""
    g, K = V.quadratic_parts()
    nd = V.nd
    minv = np.diag(1.0 / np.asarray(masses, dtype=float))
    L = np.zeros((2 * nd + 1, 2 * nd + 1))
    L[:nd, nd : 2 * nd] = minv
    L[nd : 2 * nd, :nd] = -K
    L[nd : 2 * nd, -1] = -g
    E = expm(L * t)
    return E[: 2 * nd, : 2 * nd], E[: 2 * nd, -1]


def _fourier_shift(values: np.ndarray, axis: int, h: float, shift) -> np.ndarray:
    """f(x + shift) along ``axis``; ``shift`` broadcasts against the other axes."""
    n = values.shape[axis]
    m = 2 * n
    spec = np.fft.fft(values, n=m, axis=axis)
    xi = TWO_PI * np.fft.fftfreq(m, h)
    if m % 2 == 0:
        xi[m // 2] = 0.0
    spec = np.moveaxis(spec, axis, -1)
    shift = np.asarray(shift, dtype=float)
    if shift.ndim:
        shift = np.moveaxis(shift, axis, -1) if shift.ndim == values.ndim else shift
    spec = spec * np.exp(1j * xi * shift)
    out = np.fft.ifft(spec, axis=-1)[..., :n]
    return np.moveaxis(out, -1, axis)


def _shear(values, axis_shift, axis_param, grids, coef):
    """f(.., x + coef * y, ..) with x along ``axis_shift`` and y along ``axis_param``."""
    y = grids[axis_param].points
    shape = [1] * values.ndim
    shape[axis_param] = y.size
    shift = (coef * y).reshape(shape)
    return _fourier_shift(values, axis_shift, grids[axis_shift].h, shift)


def _apply_mode_map(values, iq, ip, grids, M2):
    """values(z) -> values(M2 z) in the (q_j, p_j) plane by three spectral shears."""
    A, B = M2[0]
    C, D = M2[1]
    if A < 0:
        # T_{-I}: reflection through the origin on symmetric grids
        values = np.flip(values, axis=(iq, ip))
        A, B, C, D = -A, -B, -C, -D
    if abs(C) >= abs(B) and abs(C) > 1e-12:
        a, c = (A - 1.0) / C, (D - 1.0) / C
        values = _shear(values, iq, ip, grids, a)
        values = _shear(values, ip, iq, grids, C)
        values = _shear(values, iq, ip, grids, c)
    elif abs(B) > 1e-12:
        x, z = (D - 1.0) / B, (A - 1.0) / B
        values = _shear(values, ip, iq, grids, x)
        values = _shear(values, iq, ip, grids, B)
        values = _shear(values, ip, iq, grids, z)
    elif abs(A - 1.0) > 1e-12 or abs(D - 1.0) > 1e-12:
        # pure squeeze: factor through a quarter turn R, M = (M R^-1) R
        R = np.array([[0.0, 1.0], [-1.0, 0.0]])
        values = _apply_mode_map(values, iq, ip, grids, np.array([[A, B], [C, D]]) @ R.T)
        values = _apply_mode_map(values, iq, ip, grids, R)
    return values


def moyal_propagate_quadratic(
    w: WignerGrid,
    V: PolynomialPotential,
    t: float,
    masses=None,
    method: str = "shear",
) -> WignerGrid:
    """Exact Moyal evolution for a potential of degree <= 2.

    W_t(z) = W_0(M_{-t} z + c_{-t}) along the Hamiltonian flow. ``method="shear"``
    applies the map spectrally (Fourier translation plus three shears per mode)
    and needs symmetric grids and a flow that does not couple modes;
    ``method="bilinear"`` interpolates W_0 at the back-propagated points.
    """
    nd = w.layout.nd
    if V.nd != nd:
        raise ValueError("potential and state dimensions differ")
    masses = w.layout.masses if masses is None else tuple(np.atleast_1d(masses).astype(float))
    M, c = quadratic_flow(V, masses, -t)
    grids = w.grids
    if method == "bilinear":
        mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
        z = np.stack([m.ravel() for m in mesh])
        src = M @ z + c[:, None]
        idx = np.array([(src[a] - g.min) / g.h for a, g in enumerate(grids)])
        vals = map_coordinates(w.values, idx, order=1, mode="constant", cval=0.0)
        return WignerGrid(w.layout, w.qgrids, w.pgrids, vals.reshape(w.values.shape))
    if method != "shear":
        raise ValueError(f"unknown method {method!r}")
    if not all(g.is_symmetric for g in grids):
        raise ValueError("shear propagation needs grids symmetric about 0")
    block = np.zeros_like(M, dtype=bool)
    for j in range(nd):
        block[np.ix_([j, nd + j], [j, nd + j])] = True
    if np.abs(M[~block]).max(initial=0.0) > 1e-12:
        raise ValueError("flow couples modes; use method='bilinear'")
    vals = w.values.astype(complex)
    # W_0(Mz + c) = g(Mz) with g(z) = W_0(z + c)
    for a, g in enumerate(grids):
        if c[a] != 0.0:
            vals = _fourier_shift(vals, a, g.h, c[a])
    for j in range(nd):
        M2 = M[np.ix_([j, nd + j], [j, nd + j])]
        vals = _apply_mode_map(vals, j, nd + j, grids, M2)
    return WignerGrid(w.layout, w.qgrids, w.pgrids, vals.real)


# ----------------------------------------------------------------------------
# Moyal series for polynomial potentials


def _spectral_derivative(values: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    n = values.shape[axis]
    m = 2 * n
    spec = np.fft.fft(values, n=m, axis=axis)
    xi = TWO_PI * np.fft.fftfreq(m, h)
    if m % 2 == 0 and order % 2:
        xi[m // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = m
    spec = spec * ((1j * xi) ** order).reshape(shape)
    out = np.fft.ifft(spec, axis=axis)
    return np.take(out, np.arange(n), axis=axis).real


def _potential_derivative(V: PolynomialPotential, alpha, q) -> np.ndarray:
    """d^alpha V at the mesh points ``q`` (list of Nd arrays)."""
    out = np.zeros(np.broadcast_shapes(*[np.shape(x) for x in q]))
    for key, c in V.coefficients.items():
        if any(k < a for k, a in zip(key, alpha)):
            continue
        term = c * np.ones_like(out)
        for x, k, a in zip(q, key, alpha):
            term = term * np.prod(np.arange(k - a + 1, k + 1)) * x ** (k - a)
        out = out + term
    return out


def moyal_rhs(w: WignerGrid, V: PolynomialPotential, masses=None) -> WignerGrid:
    """dW/dt from the Moyal bracket, which terminates for polynomial potentials:

        dW/dt = -sum_j (p_j/m_j) dW/dq_j
                + sum_{|a| odd} (-1)^((|a|-1)/2) 2^(1-|a|) / a! (d^a V)(q) d^a_p W.

    Derivatives are spectral; W must decay at the grid edges.
    """
    nd = w.layout.nd
    if V.nd != nd:
        raise ValueError("potential and state dimensions differ")
    masses = w.layout.masses if masses is None else tuple(np.atleast_1d(masses).astype(float))
    mesh = w.mesh()
    q, p = mesh[:nd], mesh[nd:]
    out = np.zeros_like(w.values)
    for j in range(nd):
        out -= p[j] / masses[j] * _spectral_derivative(w.values, j, w.qgrids[j].h, 1)
    for alpha in product(*[range(V.degree + 1)] * nd):
        s = sum(alpha)
        if s % 2 == 0 or s > V.degree:
            continue
        dV = _potential_derivative(V, alpha, q)
        if not np.any(dV):
            continue
        dW = w.values
        for j, a in enumerate(alpha):
            if a:
                dW = _spectral_derivative(dW, nd + j, w.pgrids[j].h, a)
        fact = np.prod([np.prod(np.arange(1, a + 1)) for a in alpha])
        out += (-1) ** ((s - 1) // 2) * 2.0 ** (1 - s) / fact * dV * dW
    return WignerGrid(w.layout, w.qgrids, w.pgrids, out)


def moyal_consistency(
    w: WignerGrid,
    V: PolynomialPotential,
    frames: CartesianFrames,
    k,
    masses=None,
    tolerance: float = 1e-3,
) -> ResidualReport:
    """Evolution equation with dw/dt taken from the Moyal series instead of a time step.

    Valid for potentials of any degree up to 4, so it exercises the cubic
    terms of ImV that the exact quadratic flow never reaches.
    """
    f = TomogramField.from_wigner(w, frames, k)
    dt = TomogramField.from_wigner(moyal_rhs(w, V, masses), frames, k)
    total = dt.values + evolution_terms(f, V, masses)
    r = _interior_max(total, frames)
    return ResidualReport("evolution_moyal", _grid_info(f), TRUST_FRACTION, r, 0.0, tolerance)
