"""Operator-symbol correspondence for one mode and the star product it induces.

Symbols are tomograms w_A(X, mu, nu) = Tr(A delta(X - mu q - nu p)). Their
unit-frequency Fourier coefficient is chi_A(mu, nu) = Tr(A exp(i(mu q + nu p))),
and the inverse map is

    A = (2 pi)^-1 int chi_A(mu, nu) exp(-i(mu q + nu p)) dmu dnu.

The exponentials are displacement operators, whose number-basis elements are
known in closed form; they are evaluated exactly rather than through a
truncated matrix exponential. Star products are computed by the operator
route: reconstruct both operators, multiply, take the symbol.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import sqrtm

from .core import (
    AxisGrid,
    CartesianFrames,
    ComTomogram,
    FockMatrix,
    Frame,
    InconsistentInputError,
    ModeLayout,
    TomographyError,
    _cell_volume,
)
from .states import displacement_element
from .transforms import TWO_PI, Characteristic, com_from_characteristic, com_to_characteristic

DEFAULT_TRUNCATION = 32


class TruncationError(TomographyError):
    """Reconstructed operator populates the highest retained level."""


@dataclass(frozen=True)
class SymbolField:
    """chi_A on a Cartesian (mu, nu) grid, origin included (chi_A(0) = Tr A)."""

    cartesian: CartesianFrames
    values: np.ndarray

    def __post_init__(self):
        if self.cartesian.nd != 1 or len(self.cartesian.active) != 2:
            raise ValueError("symbol fields are single-mode grids over (mu, nu)")
        v = np.array(self.values, dtype=complex)
        if v.shape != self.cartesian.shape:
            raise ValueError("values do not match the frame grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_characteristic(cls, chi: Characteristic) -> "SymbolField":
        if chi.cartesian is None:
            raise ValueError("characteristic must be on a Cartesian frame grid")
        return cls(chi.cartesian, chi.on_grid())

    @classmethod
    def from_tomogram(cls, t: ComTomogram) -> "SymbolField":
        return cls.from_characteristic(com_to_characteristic(t))

    def to_characteristic(self) -> Characteristic:
        return Characteristic.from_grid(ModeLayout.modes(1), self.cartesian, self.values)

    def max_diff(self, other: "SymbolField") -> float:
        if other.cartesian != self.cartesian:
            raise ValueError("symbol fields live on different grids")
        return float(np.abs(self.values - other.values).max())


def _as_symbol(f) -> SymbolField:
    if isinstance(f, SymbolField):
        return f
    if isinstance(f, Characteristic):
        return SymbolField.from_characteristic(f)
    if isinstance(f, ComTomogram):
        return SymbolField.from_tomogram(f)
    raise TypeError(f"cannot read a symbol from {type(f).__name__}")


def displacement_matrix(M: int, mu, nu) -> np.ndarray:
    """<m| exp(i(mu q + nu p)) |n> for m, n < M; shape ``mu.shape + (M, M)``."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    out = np.empty(np.broadcast_shapes(mu.shape, nu.shape) + (M, M), dtype=complex)
    for m in range(M):
        for n in range(M):
            out[..., m, n] = displacement_element(m, n, mu, nu)
    return out


@dataclass
class QuantizerContext:
    """Number-basis machinery for one mode, truncated at ``truncation`` levels.

    The displacement matrices for a frame grid are built once by
    :meth:`build` and then only read.
    """

    truncation: int = DEFAULT_TRUNCATION
    leakage_tol: float = 1e-6
    hermiticity_tol: float = 1e-6
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.truncation < 2:
            raise ValueError("truncation must be at least 2")

    @property
    def layout(self) -> ModeLayout:
        return ModeLayout.modes(1)

    def build(self, cartesian: CartesianFrames) -> np.ndarray:
        """Displacement matrices exp(i(mu q + nu p)) on every grid point (cached)."""
        key = cartesian
        if key not in self._cache:
            v = cartesian.vectors
            mats = displacement_matrix(self.truncation, v[..., 0], v[..., 1])
            mats.setflags(write=False)
            self._cache[key] = mats
        return self._cache[key]

    def unitarity_defect(self, mu: float, nu: float, levels: int | None = None) -> float:
        """max |(D D^+ - 1)| on the lowest ``levels`` (default M/2) levels.

        The truncated block of a displacement is not unitary near level M; the
        low block is where reconstructed states must live.
        """
        L = levels or self.truncation // 2
        D = displacement_matrix(self.truncation, mu, nu)
        prod = D @ D.conj().T
        return float(np.abs(prod[:L, :L] - np.eye(L)).max())

    def trace_symbol(self, A: FockMatrix, mu, nu) -> np.ndarray:
        """chi_A(mu, nu) = Tr(A exp(i(mu q + nu p))) at arbitrary points."""
        self._check_operator(A)
        mu = np.asarray(mu, dtype=float)
        nu = np.asarray(nu, dtype=float)
        out = np.zeros(np.broadcast_shapes(mu.shape, nu.shape), dtype=complex)
        vals = A.values
        for n, m in zip(*np.nonzero(np.abs(vals) > 0)):
            out = out + vals[n, m] * displacement_element(m, n, mu, nu)
        return out

    def _check_operator(self, A: FockMatrix) -> None:
        if A.nmodes != 1 or A.truncation != self.truncation:
            raise ValueError(f"expected a single-mode operator with truncation {self.truncation}")


def symbol_field(A: FockMatrix, ctx: QuantizerContext, cartesian: CartesianFrames) -> SymbolField:
    """chi_A on a Cartesian grid from the cached displacement matrices."""
    ctx._check_operator(A)
    D = ctx.build(cartesian)
    return SymbolField(cartesian, np.einsum("...mn,nm->...", D, A.values))


def symbol_from_operator(
    A: FockMatrix, ctx: QuantizerContext, frames: Sequence[Frame] | CartesianFrames, xgrid: AxisGrid
) -> ComTomogram:
    """Tomogram symbol w_A(X, mu, nu) = (2 pi)^-1 int exp(-ikX) Tr(A exp(ik(mu q + nu p))) dk.

    Non-positive operators give signed fields. A k series that does not
    resolve the symbol on ``xgrid`` raises CoverageError.
    """
    if abs(A.trace()) == 0:
        raise ValueError("traceless operators have no normalized tomogram symbol; use symbol_field")
    positive = A.is_hermitian and np.linalg.eigvalsh(A.values).min() > -1e-12
    return com_from_characteristic(
        ctx.layout,
        lambda mu, nu: ctx.trace_symbol(A, mu[..., 0], nu[..., 0]),
        frames,
        xgrid,
        signed=not positive,
        coverage_tol=1e-6 * max(1.0, abs(A.trace())),
    )


def operator_from_symbol(f, ctx: QuantizerContext, check_leakage: bool = True) -> FockMatrix:
    """A = (2 pi)^-1 int chi_A(mu, nu) exp(-i(mu q + nu p)) dmu dnu (trapezoid rule).

    Accepts a SymbolField, a Characteristic or a ComTomogram on a Cartesian
    (mu, nu) grid. For Hermitian symbols (chi(-z) = conj chi(z)) the result is
    symmetrized and its anti-Hermitian part is checked against the
    context tolerance.
    """
    sym = _as_symbol(f)
    cart = sym.cartesian
    D = ctx.build(cart)
    w = sym.values * _cell_volume(cart.axes)
    # exp(-i(mu q + nu p)) = D^+, so sum_f c_f D_f^+ = (sum_f conj(c_f) D_f)^+
    S = np.tensordot(np.conj(w), D, axes=w.ndim).conj().T / TWO_PI
    if _hermitian_symbol(sym):
        asym = float(np.abs(S - S.conj().T).max())
        if asym > ctx.hermiticity_tol * max(1.0, float(np.abs(S).max())):
            raise InconsistentInputError(f"reconstructed operator has anti-Hermitian part {asym:.2e}")
        S = 0.5 * (S + S.conj().T)
    if check_leakage:
        edge = abs(S[-1, -1])
        if edge > ctx.leakage_tol:
            raise TruncationError(f"level {ctx.truncation - 1} carries {edge:.2e}; raise the truncation")
    return FockMatrix(ctx.truncation, S)


def _hermitian_symbol(sym: SymbolField) -> bool:
    if not all(ax.is_symmetric for ax in sym.cartesian.axes):
        return False
    flipped = np.conj(sym.values[::-1, ::-1])
    return bool(np.abs(flipped - sym.values).max() <= 1e-8 * max(1.0, float(np.abs(sym.values).max())))


def identity_symbol(cartesian: CartesianFrames) -> SymbolField:
    """Tr(exp(i(mu q + nu p))) = 2 pi delta(mu) delta(nu) as a discrete delta at the origin."""
    origin = cartesian.origin_index
    if origin is None:
        raise ValueError("the frame grid must contain the origin")
    vals = np.zeros(cartesian.shape, dtype=complex)
    vals[origin] = TWO_PI / float(_cell_volume(cartesian.axes)[origin])
    return SymbolField(cartesian, vals)


def star_product(fA, fB, ctx: QuantizerContext, check_leakage: bool = False) -> SymbolField:
    """Symbol of the operator product: f_A * f_B = symbol(op(f_A) op(f_B)) on the grid of f_A.

    The top-level leakage monitor is off by default because operator symbols
    such as the identity legitimately populate every retained level.
    """
    A = operator_from_symbol(fA, ctx, check_leakage=check_leakage)
    B = operator_from_symbol(fB, ctx, check_leakage=check_leakage)
    cart = _as_symbol(fA).cartesian
    return symbol_field(FockMatrix(ctx.truncation, A.values @ B.values), ctx, cart)


def purity(t, ctx: QuantizerContext) -> float:
    """Tr(rho^2) of the reconstructed state."""
    rho = operator_from_symbol(t, ctx).values
    val = np.trace(rho @ rho)
    return float(val.real)


def fidelity(rho: FockMatrix, target: FockMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2; Tr(rho sigma) for pure targets."""
    r, s = rho.values, target.values
    if abs(np.trace(s @ s).real - 1.0) < 1e-10:
        return float(np.trace(r @ s).real)
    root = sqrtm(s)
    inner = sqrtm(root @ r @ root)
    return float(np.trace(inner).real ** 2)


def random_operator(M: int, rank: int, levels: int, rng: np.random.Generator) -> FockMatrix:
    """Random complex operator of the given rank supported on the lowest ``levels`` levels."""
    if levels > M:
        raise ValueError("support exceeds the truncation")
    L = rng.normal(size=(levels, rank)) + 1j * rng.normal(size=(levels, rank))
    R = rng.normal(size=(rank, levels)) + 1j * rng.normal(size=(rank, levels))
    out = np.zeros((M, M), dtype=complex)
    out[:levels, :levels] = L @ R / levels
    return FockMatrix(M, out)


def reconstruction_report(t, ctx: QuantizerContext, target: FockMatrix | None = None) -> dict:
    """Diagnostics for a reconstruction: trace, purity, Hermiticity, top-level population, fidelity."""
    rho = operator_from_symbol(t, ctx, check_leakage=False)
    r = rho.values
    out = {
        "truncation": ctx.truncation,
        "trace": float(np.trace(r).real),
        "purity": float(np.trace(r @ r).real),
        "top_level_population": float(abs(r[-1, -1])),
        "min_eigenvalue": float(np.linalg.eigvalsh(r).min()),
    }
    if target is not None:
        out["fidelity"] = fidelity(rho, target)
    return out
