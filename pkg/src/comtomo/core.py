"""Basic containers for center-of-mass tomography and the universal identities.

A tomogram ``w(X, mu, nu)`` is the probability density of the single random
variable ``X = mu.q + nu.p``, where ``mu`` and ``nu`` are real vectors with one
component per degree of freedom. Units have hbar = 1 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# default tolerances: closed-form identities, one grid transform, composed transforms
TOL_ANALYTIC = 1e-10
TOL_TRANSFORM = 1e-6
TOL_COMPOSED = 1e-4


class TomographyError(Exception):
    """Base class for errors raised by this package."""


class DegenerateFrameError(TomographyError, ValueError):
    """Raised for the frame mu = nu = 0, where the tomogram is a distribution."""


class CoverageError(TomographyError):
    """Raised when a grid does not cover the support or decay of a function."""


class InconsistentInputError(TomographyError, ValueError):
    """Raised when an input violates a structural property (e.g. hermiticity)."""


def _readonly(a, dtype=None) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeLayout:
    """N particles in d dimensions with one mass per degree of freedom."""

    N: int
    d: int = 1
    masses: tuple = None

    def __post_init__(self):
        if int(self.N) < 1 or int(self.d) < 1:
            raise ValueError("N and d must be positive integers")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "d", int(self.d))
        masses = self.masses
        if masses is None:
            masses = (1.0,) * (self.N * self.d)
        masses = tuple(float(m) for m in np.ravel(masses))
        if len(masses) != self.N * self.d:
            raise ValueError(f"expected {self.N * self.d} masses, got {len(masses)}")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be strictly positive")
        object.__setattr__(self, "masses", masses)

    @property
    def nd(self) -> int:
        return self.N * self.d

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @classmethod
    def modes(cls, nd: int, masses=None) -> "ModeLayout":
        """Layout of ``nd`` distinguishable one-dimensional modes."""
        return cls(N=nd, d=1, masses=masses)

    def to_dict(self) -> dict:
        return {"N": self.N, "d": self.d, "masses": list(self.masses)}

    @classmethod
    def from_dict(cls, data: dict) -> "ModeLayout":
        return cls(N=data["N"], d=data.get("d", 1), masses=data.get("masses"))


@dataclass(frozen=True)
class Frame:
    """A pair of real Nd-vectors (mu, nu) selecting the measured combination."""

    mu: tuple
    nu: tuple

    def __post_init__(self):
        mu = tuple(float(v) for v in np.ravel(self.mu))
        nu = tuple(float(v) for v in np.ravel(self.nu))
        if len(mu) != len(nu):
            raise ValueError("mu and nu must have the same length")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @property
    def nd(self) -> int:
        return len(self.mu)

    @property
    def vector(self) -> np.ndarray:
        """Concatenation (mu, nu) as a length-2Nd array."""
        return np.array(self.mu + self.nu)

    @property
    def norm2(self) -> float:
        return float(np.dot(self.vector, self.vector))

    @property
    def is_degenerate(self) -> bool:
        return all(v == 0.0 for v in self.mu) and all(v == 0.0 for v in self.nu)

    def require_nondegenerate(self) -> "Frame":
        if self.is_degenerate:
            raise DegenerateFrameError("frame mu = nu = 0 is degenerate")
        return self

    def scaled(self, lam: float) -> "Frame":
        return Frame(tuple(lam * v for v in self.mu), tuple(lam * v for v in self.nu))

    @classmethod
    def from_vector(cls, v) -> "Frame":
        v = np.ravel(v)
        half = v.size // 2
        return cls(v[:half], v[half:])

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "nu": list(self.nu)}

    @classmethod
    def from_dict(cls, data: dict) -> "Frame":
        return cls(data["mu"], data["nu"])


@dataclass(frozen=True)
class AxisGrid:
    """``n`` uniformly spaced points from ``min`` to ``max`` inclusive."""

    min: float
    max: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "min", float(self.min))
        object.__setattr__(self, "max", float(self.max))
        object.__setattr__(self, "n", int(self.n))
        if not self.min < self.max:
            raise ValueError("AxisGrid requires min < max")
        if self.n < 2:
            raise ValueError("AxisGrid requires n >= 2")

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "AxisGrid":
        return cls(-half_width, half_width, n)

    @property
    def h(self) -> float:
        return (self.max - self.min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.n)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid-rule weights."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @property
    def is_symmetric(self) -> bool:
        return abs(self.min + self.max) <= 1e-12 * max(1.0, abs(self.max))

    def index_of(self, x: float, tol: float = 1e-9) -> int | None:
        t = (x - self.min) / self.h
        i = int(round(t))
        if 0 <= i < self.n and abs(t - i) <= tol:
            return i
        return None

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "n": self.n}

    @classmethod
    def from_dict(cls, data: dict) -> "AxisGrid":
        return cls(data["min"], data["max"], data["n"])


def trapezoid(values, grid: AxisGrid, axis: int = -1):
    return np.tensordot(np.moveaxis(values, axis, -1), grid.weights, axes=([-1], [0]))


@dataclass(frozen=True)
class CartesianFrames:
    """Uniform Cartesian grid of frames.

    One AxisGrid per component of (mu, nu); a component given as ``None`` is
    held at zero and does not appear in the grid shape. The frame at the
    origin is degenerate and is excluded from :meth:`frame_list`; its
    characteristic value is exactly 1.
    """

    mu_axes: tuple
    nu_axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "mu_axes", tuple(self.mu_axes))
        object.__setattr__(self, "nu_axes", tuple(self.nu_axes))
        if len(self.mu_axes) != len(self.nu_axes):
            raise ValueError("mu_axes and nu_axes must have equal length")

    @classmethod
    def square(cls, nd: int, half_width: float, n: int, momentum: bool = True) -> "CartesianFrames":
        ax = AxisGrid.symmetric(half_width, n)
        return cls((ax,) * nd, ((ax,) * nd) if momentum else (None,) * nd)

    @property
    def nd(self) -> int:
        return len(self.mu_axes)

    @property
    def axes(self) -> tuple:
        """Active (non-fixed) axes in (mu..., nu...) order."""
        return tuple(a for a in self.mu_axes + self.nu_axes if a is not None)

    @property
    def active(self) -> tuple:
        """Indices into the length-2Nd frame vector of the active components."""
        return tuple(i for i, a in enumerate(self.mu_axes + self.nu_axes) if a is not None)

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def vectors(self) -> np.ndarray:
        """Frame vectors for every grid point, shape ``shape + (2Nd,)``."""
        mesh = np.meshgrid(*[a.points for a in self.axes], indexing="ij")
        out = np.zeros(self.shape + (2 * self.nd,))
        for comp, m in zip(self.active, mesh):
            out[..., comp] = m
        return out

    @property
    def origin_index(self) -> tuple | None:
        idx = tuple(a.index_of(0.0) for a in self.axes)
        return None if any(i is None for i in idx) else idx

    def nondegenerate_mask(self) -> np.ndarray:
        v = self.vectors
        return np.any(v != 0.0, axis=-1)

    def frame_list(self) -> list:
        v = self.vectors.reshape(-1, 2 * self.nd)
        return [Frame.from_vector(x) for x in v if np.any(x != 0.0)]

    def scatter(self, per_frame, origin_value=1.0) -> np.ndarray:
        """Place per-frame values (in frame_list order) onto the grid."""
        per_frame = np.asarray(per_frame)
        mask = self.nondegenerate_mask()
        out = np.full(self.shape + per_frame.shape[1:], origin_value, dtype=np.result_type(per_frame, type(origin_value)))
        out[mask] = per_frame
        return out

    def spacing(self) -> tuple:
        return tuple(a.h for a in self.axes)

    def to_dict(self) -> dict:
        enc = lambda a: None if a is None else a.to_dict()
        return {"mu_axes": [enc(a) for a in self.mu_axes], "nu_axes": [enc(a) for a in self.nu_axes]}

    @classmethod
    def from_dict(cls, data: dict) -> "CartesianFrames":
        dec = lambda a: None if a is None else AxisGrid.from_dict(a)
        return cls([dec(a) for a in data["mu_axes"]], [dec(a) for a in data["nu_axes"]])


@dataclass(frozen=True)
class ComTomogram:
    """Samples of w(X, mu, nu): one row per frame, one column per X-grid point.

    ``signed`` marks fields that are not probability densities (for example
    the image of a Fermi state under a partial permutation); for those the
    non-negativity check is waived.
    """

    layout: ModeLayout
    frames: tuple
    xgrid: AxisGrid
    values: np.ndarray
    tolerance: float = TOL_COMPOSED
    cartesian: CartesianFrames | None = None
    signed: bool = False

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        values = _readonly(self.values, np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (len(frames), self.xgrid.n):
            raise ValueError(f"values shape {values.shape} != ({len(frames)}, {self.xgrid.n})")
        for f in frames:
            if f.nd != self.layout.nd:
                raise ValueError("frame dimension does not match layout")
            f.require_nondegenerate()
        if not self.signed and values.size and values.min() < -1e-10 * max(1.0, np.abs(values).max()):
            raise ValueError("tomogram values must be non-negative")

    @property
    def frame_vectors(self) -> np.ndarray:
        return np.array([f.vector for f in self.frames])

    def row(self, frame: Frame) -> np.ndarray:
        return self.values[self.frame_index(frame)]

    def frame_index(self, frame: Frame, tol: float = 1e-12) -> int:
        target = frame.vector
        diffs = np.abs(self.frame_vectors - target).max(axis=1)
        i = int(np.argmin(diffs))
        if diffs[i] > tol:
            raise KeyError(f"frame {frame} not present in tomogram")
        return i


# ----------------------------------------------------------------------------
# operations


def com_frame_from_masses(layout: ModeLayout, scaled_mu, scaled_nu) -> Frame:
    """Frame whose variable X is the mass-weighted center-of-mass combination."""
    m = np.asarray(layout.masses)
    mu = np.asarray(scaled_mu, dtype=float)
    nu = np.asarray(scaled_nu, dtype=float)
    if mu.shape != m.shape or nu.shape != m.shape:
        raise ValueError("scaled_mu and scaled_nu need one entry per degree of freedom")
    frame = Frame(m * mu / layout.total_mass, m * nu / layout.total_mass)
    return frame.require_nondegenerate()


def homogeneity_rescale(t: ComTomogram, lam: float) -> ComTomogram:
    """Re-express ``t`` at frames (lam mu, lam nu) on the X-grid lam*X.

    Implements w(lam X, lam mu, lam nu) = w(X, mu, nu) / |lam|.
    """
    lam = float(lam)
    if lam == 0.0:
        raise ValueError("lambda must be nonzero")
    values = t.values / abs(lam)
    if lam > 0:
        xgrid = AxisGrid(lam * t.xgrid.min, lam * t.xgrid.max, t.xgrid.n)
    else:
        xgrid = AxisGrid(lam * t.xgrid.max, lam * t.xgrid.min, t.xgrid.n)
        values = values[:, ::-1]
    frames = tuple(f.scaled(lam) for f in t.frames)
    return ComTomogram(t.layout, frames, xgrid, values, t.tolerance, None, t.signed)


def reduce_to_unit_sphere(frame: Frame) -> tuple[Frame, float]:
    """Return (frame / sqrt(lam), lam) with lam = mu.mu + nu.nu."""
    frame.require_nondegenerate()
    lam = frame.norm2
    return frame.scaled(1.0 / np.sqrt(lam)), lam


@dataclass(frozen=True)
class NormalizationReport:
    deviations: np.ndarray
    tol: float
    flagged: tuple = field(default=())

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max()) if self.deviations.size else 0.0

    @property
    def ok(self) -> bool:
        return not self.flagged


def check_normalization(t: ComTomogram, tol: float = TOL_TRANSFORM) -> NormalizationReport:
    """Per-frame |trapezoid integral over X - 1|; frames above ``tol`` are flagged."""
    dev = np.abs(trapezoid(t.values, t.xgrid) - 1.0)
    flagged = tuple(int(i) for i in np.nonzero(dev > tol)[0])
    return NormalizationReport(dev, tol, flagged)


def x_slice_value(t: ComTomogram, frame_index: int, X: float) -> float:
    """Linear interpolation of the stored samples of one frame at ``X``."""
    g = t.xgrid
    if not g.min <= X <= g.max:
        raise CoverageError(f"X={X} outside grid [{g.min}, {g.max}]")
    return float(np.interp(X, g.points, t.values[frame_index]))


def x_scaling_pair(w: Callable[[float, Frame], float], X: float, frame: Frame) -> tuple[float, float]:
    """Both sides of w(X, mu, nu) = |X|^-1 w(1, mu/X, nu/X) for a callable ``w``."""
    if X == 0.0:
        raise ValueError("X must be nonzero")
    return w(X, frame), w(1.0, frame.scaled(1.0 / X)) / abs(X)


def frames_from_vectors(vectors: Sequence) -> tuple:
    return tuple(Frame.from_vector(v) for v in vectors)


def random_frames(nd: int, count: int, rng: np.random.Generator, scale: float = 1.0) -> list:
    """Random non-degenerate frames with components drawn uniformly in [-scale, scale]."""
    out = []
    while len(out) < count:
        v = rng.uniform(-scale, scale, size=2 * nd)
        if np.dot(v, v) > 0.04 * scale**2:
            out.append(Frame.from_vector(v))
    return out


# ----------------------------------------------------------------------------
# oracle representations


def _grid_shape(grids) -> tuple:
    return tuple(g.n for g in grids)


def _cell_volume(grids) -> np.ndarray:
    """Outer product of per-axis trapezoid weights."""
    out = np.ones(())
    for g in grids:
        out = np.multiply.outer(out, g.weights)
    return out


@dataclass(frozen=True)
class WignerGrid:
    """W(q, p) on a Cartesian grid; axes ordered (q_1..q_Nd, p_1..p_Nd)."""

    layout: ModeLayout
    qgrids: tuple
    pgrids: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "qgrids", tuple(self.qgrids))
        object.__setattr__(self, "pgrids", tuple(self.pgrids))
        if len(self.qgrids) != self.layout.nd or len(self.pgrids) != self.layout.nd:
            raise ValueError("need one q and one p grid per degree of freedom")
        values = _readonly(self.values)
        if np.iscomplexobj(values):
            raise ValueError("Wigner values must be real")
        values = _readonly(values, np.float64)
        if values.shape != _grid_shape(self.grids):
            raise ValueError(f"values shape {values.shape} does not match grids")
        object.__setattr__(self, "values", values)

    @property
    def grids(self) -> tuple:
        return self.qgrids + self.pgrids

    def mesh(self) -> list:
        return np.meshgrid(*[g.points for g in self.grids], indexing="ij")

    def integral(self) -> float:
        return float(np.sum(self.values * _cell_volume(self.grids)))

    def marginal(self, axis: int) -> np.ndarray:
        """Integrate out all axes except ``axis`` (index into ``grids``)."""
        v = self.values
        for ax in reversed(range(v.ndim)):
            if ax != axis:
                v = trapezoid(v, self.grids[ax], axis=ax)
        return v

    @classmethod
    def from_function(cls, layout: ModeLayout, qgrids, pgrids, fn) -> "WignerGrid":
        """Sample ``fn(q, p)`` where q and p are lists of Nd mesh arrays."""
        grids = tuple(qgrids) + tuple(pgrids)
        mesh = np.meshgrid(*[g.points for g in grids], indexing="ij")
        nd = layout.nd
        return cls(layout, qgrids, pgrids, fn(mesh[:nd], mesh[nd:]))


@dataclass(frozen=True)
class DensityMatrixGrid:
    """rho(q', q'') on a grid; axes ordered (q'_1..q'_Nd, q''_1..q''_Nd)."""

    layout: ModeLayout
    qgrids: tuple
    values: np.ndarray
    check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "qgrids", tuple(self.qgrids))
        if len(self.qgrids) != self.layout.nd:
            raise ValueError("need one q grid per degree of freedom")
        values = _readonly(self.values, np.complex128)
        shape = _grid_shape(self.qgrids)
        if values.shape != shape + shape:
            raise ValueError(f"values shape {values.shape} does not match grids")
        object.__setattr__(self, "values", values)
        if self.check:
            mat = self.matrix()
            scale = max(1.0, float(np.abs(mat).max()))
            if np.abs(mat - mat.conj().T).max() > 1e-10 * scale:
                raise InconsistentInputError("density matrix is not Hermitian")

    def matrix(self) -> np.ndarray:
        size = int(np.prod(_grid_shape(self.qgrids)))
        return self.values.reshape(size, size)

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.matrix()).reshape(_grid_shape(self.qgrids))

    def trace(self) -> float:
        return float(np.sum(self.diagonal().real * _cell_volume(self.qgrids)))

    @classmethod
    def from_wavefunction(cls, layout: ModeLayout, qgrids, psi_values) -> "DensityMatrixGrid":
        psi = np.asarray(psi_values, dtype=complex)
        return cls(layout, qgrids, np.multiply.outer(psi, psi.conj()))


@dataclass(frozen=True)
class FockMatrix:
    """Operator in the truncated number basis, levels 0..M-1 for each of ``nmodes``."""

    truncation: int
    values: np.ndarray
    nmodes: int = 1

    def __post_init__(self):
        object.__setattr__(self, "truncation", int(self.truncation))
        object.__setattr__(self, "nmodes", int(self.nmodes))
        values = _readonly(self.values, np.complex128)
        size = self.truncation**self.nmodes
        if values.shape != (size, size):
            raise ValueError(f"expected a {size}x{size} matrix")
        object.__setattr__(self, "values", values)

    @property
    def is_hermitian(self) -> bool:
        return bool(np.allclose(self.values, self.values.conj().T, atol=1e-12))

    def trace(self) -> complex:
        return complex(np.trace(self.values))


def ladder(M: int) -> np.ndarray:
    """Annihilation operator truncated to M levels."""
    return np.diag(np.sqrt(np.arange(1, M)), 1).astype(complex)


def position_momentum(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated q = (a + a^+)/sqrt2 and p = (a - a^+)/(i sqrt2)."""
    a = ladder(M)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2.0), (a - ad) / (1j * np.sqrt(2.0))


@dataclass(frozen=True)
class SymplecticTomogram:
    """w_s(Y, mu, nu) for each frame on a Cartesian Y grid with one axis per mode.

    ``values`` has shape ``(len(frames),) + tuple(g.n for g in ygrids)``.
    """

    layout: ModeLayout
    frames: tuple
    ygrids: tuple
    values: np.ndarray
    signed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "ygrids", tuple(self.ygrids))
        if len(self.ygrids) != self.layout.nd:
            raise ValueError("need one Y grid per degree of freedom")
        values = _readonly(self.values, np.float64)
        if values.shape != (len(self.frames),) + _grid_shape(self.ygrids):
            raise ValueError(f"values shape {values.shape} does not match frames and grids")
        object.__setattr__(self, "values", values)
        for f in self.frames:
            for m, n in zip(f.mu, f.nu):
                if m == 0.0 and n == 0.0:
                    raise DegenerateFrameError("symplectic frames need (mu_j, nu_j) != 0 for every mode")

    def integrals(self) -> np.ndarray:
        vol = _cell_volume(self.ygrids)
        return np.sum(self.values * vol, axis=tuple(range(1, self.values.ndim)))
