"""Closed-form state families: Gaussian, thermal, Fock and coherent.

The Fock family uses oscillator units m = omega = hbar = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, lgamma
from typing import Union

import numpy as np
from scipy.special import eval_genlaguerre, eval_laguerre

from .core import (
    AxisGrid,
    DegenerateFrameError,
    DensityMatrixGrid,
    FockMatrix,
    Frame,
    ModeLayout,
)

HERMITE_MAX = 40


def _vec(v, dtype=float) -> tuple:
    return tuple(np.ravel(np.asarray(v, dtype=dtype)).tolist())


@dataclass(frozen=True)
class GaussianStateParams:
    """Product Gaussian with Wigner factors exp(-A(q-x)^2 - B(p-y)^2) sqrt(AB)/pi."""

    x: tuple
    y: tuple
    A: tuple
    B: tuple

    def __post_init__(self):
        for name in ("x", "y", "A", "B"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        n = len(self.x)
        if not (len(self.y) == len(self.A) == len(self.B) == n):
            raise ValueError("x, y, A, B must have equal length")
        if min(self.A) <= 0 or min(self.B) <= 0:
            raise ValueError("A and B must be positive")

    @property
    def nd(self) -> int:
        return len(self.x)

    @property
    def is_pure(self) -> bool:
        return all(abs(a * b - 1.0) < 1e-12 for a, b in zip(self.A, self.B))

    @classmethod
    def ground(cls, nd: int = 1) -> "GaussianStateParams":
        return cls([0.0] * nd, [0.0] * nd, [1.0] * nd, [1.0] * nd)


@dataclass(frozen=True)
class ThermalStateParams:
    """Independent oscillators at inverse temperature ``beta``."""

    omega: tuple
    beta: float
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", _vec(self.omega))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "mass", float(self.mass))
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if min(self.omega) <= 0 or self.mass <= 0:
            raise ValueError("omega and mass must be positive")

    @property
    def nd(self) -> int:
        return len(self.omega)

    @property
    def A(self) -> np.ndarray:
        w = np.asarray(self.omega)
        return self.mass * w / (2.0 * np.sinh(w * self.beta))

    @property
    def B(self) -> np.ndarray:
        return np.cosh(np.asarray(self.omega) * self.beta)

    def as_gaussian(self) -> GaussianStateParams:
        """Equivalent Gaussian parameters: A' = 2A(B-1), B' = 1/(2A(B+1))."""
        # 2A(B-1) = m w tanh(w beta/2) and 2A(B+1) = m w coth(w beta/2), free of cancellation
        w = np.asarray(self.omega)
        a_prime = self.mass * w * np.tanh(0.5 * w * self.beta)
        b_prime = np.tanh(0.5 * w * self.beta) / (self.mass * w)
        zeros = [0.0] * self.nd
        return GaussianStateParams(zeros, zeros, a_prime, b_prime)


@dataclass(frozen=True)
class FockStateParams:
    n: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in np.ravel(self.n))
        if min(n) < 0:
            raise ValueError("occupation numbers must be non-negative")
        if max(n) > HERMITE_MAX:
            raise ValueError(f"occupation numbers above {HERMITE_MAX} are not supported")
        object.__setattr__(self, "n", n)

    @property
    def nd(self) -> int:
        return len(self.n)


@dataclass(frozen=True)
class CoherentStateParams:
    """Coherent state alpha = a + ib, mapped to x = sqrt2 a, y = -sqrt2 b, A = B = 1."""

    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha, complex))

    @property
    def nd(self) -> int:
        return len(self.alpha)

    def as_gaussian(self) -> GaussianStateParams:
        a = np.asarray(self.alpha)
        ones = [1.0] * self.nd
        return GaussianStateParams(np.sqrt(2) * a.real, -np.sqrt(2) * a.imag, ones, ones)


AnalyticState = Union[GaussianStateParams, ThermalStateParams, FockStateParams, CoherentStateParams]

_FAMILIES = {
    "gaussian": GaussianStateParams,
    "thermal": ThermalStateParams,
    "fock": FockStateParams,
    "coherent": CoherentStateParams,
}


def state_to_dict(state: AnalyticState) -> dict:
    family = next(k for k, v in _FAMILIES.items() if isinstance(state, v))
    if family == "coherent":
        params = {"alpha": [[z.real, z.imag] for z in state.alpha]}
    elif family == "thermal":
        params = {"omega": list(state.omega), "beta": state.beta, "mass": state.mass}
    elif family == "fock":
        params = {"n": list(state.n)}
    else:
        params = {k: list(getattr(state, k)) for k in ("x", "y", "A", "B")}
    return {"family": family, "params": params}


def state_from_dict(data: dict) -> AnalyticState:
    family = data.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown state family {family!r}")
    params = dict(data.get("params", {}))
    if family == "coherent":
        params["alpha"] = [complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in params["alpha"]]
    return _FAMILIES[family](**params)


# ----------------------------------------------------------------------------
# Hermite machinery


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > HERMITE_MAX:
        raise ValueError(f"n above {HERMITE_MAX} is not supported")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), 2.0 * x
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_function(n: int, x):
    """Normalized oscillator eigenfunction e^{-x^2/2} H_n(x) / (pi^{1/4} sqrt(2^n n!))."""
    x = np.asarray(x, dtype=float)
    norm = np.exp(-0.25 * np.log(np.pi) - 0.5 * (n * np.log(2.0) + lgamma(n + 1)))
    return norm * np.exp(-0.5 * x**2) * hermite(n, x)


# ----------------------------------------------------------------------------
# tomograms


def _frame_arrays(frame: Frame, nd: int) -> tuple[np.ndarray, np.ndarray]:
    if frame.nd != nd:
        raise ValueError(f"frame has {frame.nd} components, state has {nd}")
    frame.require_nondegenerate()
    return np.asarray(frame.mu), np.asarray(frame.nu)


def gaussian_tomogram(p: GaussianStateParams, frame: Frame, X):
    mu, nu = _frame_arrays(frame, p.nd)
    C = float(np.sum(mu**2 / np.asarray(p.A) + nu**2 / np.asarray(p.B)))
    if C <= 0:
        raise DegenerateFrameError("C = 0")
    shift = float(mu @ np.asarray(p.x) + nu @ np.asarray(p.y))
    X = np.asarray(X, dtype=float)
    return np.exp(-((X - shift) ** 2) / C) / np.sqrt(np.pi * C)


def thermal_D(p: ThermalStateParams, frame: Frame) -> float:
    mu, nu = _frame_arrays(frame, p.nd)
    g = p.as_gaussian()
    two_a_bm1 = np.asarray(g.A)
    two_a_bp1 = 1.0 / np.asarray(g.B)
    return float(np.sum(mu**2 / two_a_bm1 + nu**2 * two_a_bp1))


def thermal_tomogram(p: ThermalStateParams, frame: Frame, X):
    D = thermal_D(p, frame)
    X = np.asarray(X, dtype=float)
    return np.exp(-(X**2) / D) / np.sqrt(np.pi * D)


def coherent_tomogram(p: CoherentStateParams, frame: Frame, X):
    return gaussian_tomogram(p.as_gaussian(), frame, X)


def fock_mode_density(n: int, c: float, X):
    """Density of X_j for one Fock mode with c = mu_j^2 + nu_j^2."""
    X = np.asarray(X, dtype=float)
    s = X / np.sqrt(c)
    return hermite(n, s) ** 2 * np.exp(-(s**2)) / (2.0**n * factorial(n) * np.sqrt(np.pi * c))


def fock_tomogram(p: FockStateParams, frame: Frame, X):
    """Fock-state tomogram as a convolution of per-mode densities.

    All modes but the last are convolved on a shared grid; the last
    convolution is evaluated directly at each requested X so no
    interpolation error enters.
    """
    mu, nu = _frame_arrays(frame, p.nd)
    c = mu**2 + nu**2
    if np.any(c == 0):
        raise DegenerateFrameError("every mode needs mu_j^2 + nu_j^2 > 0")
    X = np.asarray(X, dtype=float)
    n = p.n
    if p.nd == 1:
        return fock_mode_density(n[0], c[0], X)
    sc = np.sqrt(c)
    h = float(sc.min()) / 8.0
    reach = sc * (np.sqrt(2.0 * np.asarray(n) + 1.0) + 9.0)
    half = int(np.ceil(reach[:-1].sum() / h))
    y = h * np.arange(-half, half + 1)
    acc = fock_mode_density(n[0], c[0], y)
    for j in range(1, p.nd - 1):
        acc = h * np.convolve(acc, fock_mode_density(n[j], c[j], y), mode="same")
    last = fock_mode_density(n[-1], c[-1], X[..., None] - y)
    return h * np.sum(acc * last, axis=-1)


def fock_pair_closed_form(n: tuple, C1: float, C2: float, X):
    """Two-mode Fock tomograms for occupations in {0, 1}, with C_j = mu_j^2 + nu_j^2."""
    X = np.asarray(X, dtype=float)
    C = C1 + C2
    g = np.exp(-(X**2) / C) / np.sqrt(np.pi)
    key = tuple(n)
    if key == (0, 0):
        return g / np.sqrt(C)
    if key in ((0, 1), (1, 0)):
        a, b = (C1, C2) if key == (0, 1) else (C2, C1)
        return (2.0 * b * X**2 + a * b + a**2) * g / C**2.5
    if key == (1, 1):
        u = X**2 / C
        poly = u**2 + u * (C1**2 + C2**2 - 4.0 * C1 * C2) / (2.0 * C1 * C2) + 0.75
        return 4.0 * C1 * C2 * g * poly / C**2.5
    raise ValueError("closed forms exist for occupations 0 and 1 only")


def analytic_tomogram(state: AnalyticState, frame: Frame, X):
    if isinstance(state, GaussianStateParams):
        return gaussian_tomogram(state, frame, X)
    if isinstance(state, ThermalStateParams):
        return thermal_tomogram(state, frame, X)
    if isinstance(state, CoherentStateParams):
        return coherent_tomogram(state, frame, X)
    if isinstance(state, FockStateParams):
        return fock_tomogram(state, frame, X)
    raise TypeError(f"unsupported state {type(state).__name__}")


def analytic_characteristic(state: AnalyticState, mu, nu):
    """chi(mu, nu) = <exp(i(mu.q + nu.p))> in closed form.

    ``mu`` and ``nu`` are arrays whose last axis runs over the Nd modes.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if isinstance(state, ThermalStateParams):
        state = state.as_gaussian()
    if isinstance(state, CoherentStateParams):
        state = state.as_gaussian()
    if isinstance(state, GaussianStateParams):
        A, B = np.asarray(state.A), np.asarray(state.B)
        C = np.sum(mu**2 / A + nu**2 / B, axis=-1)
        shift = mu @ np.asarray(state.x) + nu @ np.asarray(state.y)
        return np.exp(1j * shift - C / 4.0)
    if isinstance(state, FockStateParams):
        r2 = mu**2 + nu**2
        out = np.ones(r2.shape[:-1], dtype=complex)
        for j, n in enumerate(state.n):
            out = out * np.exp(-r2[..., j] / 4.0) * eval_laguerre(n, r2[..., j] / 2.0)
        return out
    raise TypeError(f"unsupported state {type(state).__name__}")


def displacement_element(m: int, n: int, mu, nu):
    """<m| exp(i(mu q + nu p)) |n> in the oscillator number basis.

    The operator is the displacement D(beta) with beta = (i mu - nu)/sqrt2;
    the generalized-Laguerre form is evaluated with log-gamma prefactors.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    beta = (1j * mu - nu) / np.sqrt(2.0)
    b2 = np.abs(beta) ** 2
    if m >= n:
        lo, hi, z = n, m, beta
    else:
        lo, hi, z = m, n, -np.conj(beta)
    pref = np.exp(0.5 * (lgamma(lo + 1) - lgamma(hi + 1)))
    return pref * z ** (hi - lo) * np.exp(-0.5 * b2) * eval_genlaguerre(lo, hi - lo, b2)


# ----------------------------------------------------------------------------
# wave functions, Wigner functions, density matrices


def _coords(q, nd: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (nd,):
        if nd == 1:
            q = q[..., None]
        else:
            raise ValueError(f"last axis must have length {nd}")
    return q


def analytic_wavefunction(state: AnalyticState, q):
    """psi(q) for pure families; ``q`` has the Nd modes on its last axis."""
    if isinstance(state, CoherentStateParams):
        state = state.as_gaussian()
    q = _coords(q, state.nd)
    if isinstance(state, GaussianStateParams):
        if not state.is_pure:
            raise ValueError("wave function exists only for B = 1/A")
        A, x, y = (np.asarray(v) for v in (state.A, state.x, state.y))
        f = (A / np.pi) ** 0.25 * np.exp(-0.5 * A * (q - x) ** 2 + 1j * y * q)
        return np.prod(f, axis=-1)
    if isinstance(state, FockStateParams):
        out = np.ones(q.shape[:-1], dtype=complex)
        for j, n in enumerate(state.n):
            out = out * hermite_function(n, q[..., j])
        return out
    raise TypeError("thermal states are mixed and have no wave function")


def fock_wigner_1d(n: int, q, p):
    r2 = np.asarray(q, dtype=float) ** 2 + np.asarray(p, dtype=float) ** 2
    return (-1) ** n / np.pi * np.exp(-r2) * eval_laguerre(n, 2.0 * r2)


def analytic_wigner(state: AnalyticState, q, p):
    """W(q, p) in closed form; q and p carry the Nd modes on their last axis."""
    if isinstance(state, (CoherentStateParams, ThermalStateParams)):
        state = state.as_gaussian()
    q = _coords(q, state.nd)
    p = _coords(p, state.nd)
    if isinstance(state, GaussianStateParams):
        A, B, x, y = (np.asarray(v) for v in (state.A, state.B, state.x, state.y))
        f = np.exp(-A * (q - x) ** 2 - B * (p - y) ** 2) * np.sqrt(A * B) / np.pi
        return np.prod(f, axis=-1)
    if isinstance(state, FockStateParams):
        out = np.ones(np.broadcast_shapes(q.shape, p.shape)[:-1])
        for j, n in enumerate(state.n):
            out = out * fock_wigner_1d(n, q[..., j], p[..., j])
        return out
    raise TypeError(f"unsupported state {type(state).__name__}")


def _gaussian_density_factor(A, B, x, y, q1, q2):
    # rho(q', q'') = sqrt(A/pi) exp(-A (Q - x)^2 - u^2 / (4B) + i y u), Q midpoint, u difference
    Q = 0.5 * (q1 + q2)
    u = q1 - q2
    return np.sqrt(A / np.pi) * np.exp(-A * (Q - x) ** 2 - u**2 / (4.0 * B) + 1j * y * u)


def thermal_density_factor(A: float, B: float, q1, q2):
    return np.sqrt(2.0 * A * (B - 1.0) / np.pi) * np.exp(-A * (B * (q1**2 + q2**2) - 2.0 * q1 * q2))


def coherent_amplitudes(alpha: complex, M: int) -> np.ndarray:
    """Number-basis amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!) for n < M."""
    c = np.zeros(M, dtype=complex)
    if alpha == 0:
        c[0] = 1.0
        return c
    k = np.arange(M)
    logmag = k * np.log(abs(alpha)) - 0.5 * np.array([lgamma(i + 1) for i in k]) - 0.5 * abs(alpha) ** 2
    return np.exp(logmag + 1j * k * np.angle(alpha))


def analytic_density(state: AnalyticState, qgrids=None, truncation: int | None = None, layout: ModeLayout | None = None):
    """Density operator on a coordinate grid (``qgrids``) or in the number basis (``truncation``).

    Thermal states in the number basis use Boltzmann weights renormalized over
    the retained levels.
    """
    if (qgrids is None) == (truncation is None):
        raise ValueError("give exactly one of qgrids or truncation")
    nd = state.nd
    if qgrids is not None:
        if isinstance(qgrids, AxisGrid):
            qgrids = (qgrids,) * nd
        layout = layout or ModeLayout.modes(nd)
        shape = tuple(g.n for g in qgrids)
        rho = np.ones(shape + shape, dtype=complex)
        for j, g in enumerate(qgrids):
            q1 = g.points[:, None]
            q2 = g.points[None, :]
            if isinstance(state, FockStateParams):
                f = hermite_function(state.n[j], q1) * hermite_function(state.n[j], q2)
            elif isinstance(state, ThermalStateParams):
                f = thermal_density_factor(state.A[j], state.B[j], q1, q2)
            else:
                gs = state if isinstance(state, GaussianStateParams) else state.as_gaussian()
                f = _gaussian_density_factor(gs.A[j], gs.B[j], gs.x[j], gs.y[j], q1, q2)
            idx = [None] * (2 * nd)
            idx[j] = slice(None)
            idx[nd + j] = slice(None)
            rho = rho * f[tuple(idx)]
        return DensityMatrixGrid(layout, qgrids, rho)

    M = int(truncation)
    mats = []
    for j in range(nd):
        if isinstance(state, FockStateParams):
            if state.n[j] >= M:
                raise ValueError("truncation too small for the requested occupation")
            m = np.zeros((M, M), dtype=complex)
            m[state.n[j], state.n[j]] = 1.0
        elif isinstance(state, ThermalStateParams):
            w = np.exp(-state.omega[j] * state.beta * np.arange(M))
            m = np.diag(w / w.sum()).astype(complex)
        elif isinstance(state, CoherentStateParams):
            # the x = sqrt2 a, y = -sqrt2 b map makes this the standard coherent state at conj(alpha)
            a = np.conj(state.alpha[j])
            c = coherent_amplitudes(a, M)
            m = np.outer(c, c.conj())
        else:
            raise TypeError("number-basis form available for Fock, thermal and coherent states")
        mats.append(m)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return FockMatrix(M, out, nd)
