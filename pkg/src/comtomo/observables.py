"""Expectation values from Weyl symbols, by the Wigner route or the tomogram route.

For polynomial symbols the tomogram route reads moments off derivatives of
the characteristic at the origin:

    <q^a p^b>_Weyl = (-i)^(|a|+|b|) d^a/dmu^a d^b/dnu^b chi(0, 0).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping

import numpy as np

from ._fd import central_stencil
from .core import AxisGrid, ComTomogram, ModeLayout, WignerGrid, _cell_volume, trapezoid
from .transforms import Characteristic, TWO_PI, com_to_characteristic

POLY_MAX_DEGREE = 4


@dataclass(frozen=True)
class WeylSymbol:
    """Phase-space symbol A^W(q, p).

    ``kind`` is ``"coordinate"`` (``function`` of q), ``"momentum"``
    (``function`` of p) or ``"polynomial"``. Polynomial coefficients map
    ``(a, b)`` multi-index pairs to the coefficient of q^a p^b; as a
    phase-space function this is the Weyl symbol of the symmetrized product.
    """

    layout: ModeLayout
    kind: str
    coefficients: Mapping = field(default_factory=dict)
    function: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("coordinate", "momentum", "polynomial"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        nd = self.layout.nd
        if self.kind == "polynomial":
            coeffs = {}
            for (a, b), c in dict(self.coefficients).items():
                a, b = tuple(int(v) for v in a), tuple(int(v) for v in b)
                if len(a) != nd or len(b) != nd:
                    raise ValueError("multi-indices need one entry per degree of freedom")
                if sum(a) + sum(b) > POLY_MAX_DEGREE:
                    raise ValueError(f"polynomial degree is capped at {POLY_MAX_DEGREE}")
                coeffs[(a, b)] = coeffs.get((a, b), 0.0) + complex(c)
            object.__setattr__(self, "coefficients", coeffs)
        elif self.function is None:
            raise ValueError("coordinate and momentum symbols need a function")

    def __call__(self, q, p) -> np.ndarray:
        """Evaluate on arrays with modes on the last axis."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        if self.kind == "coordinate":
            return np.asarray(self.function(q))
        if self.kind == "momentum":
            return np.asarray(self.function(p))
        out = 0.0
        for (a, b), c in self.coefficients.items():
            out = out + c * np.prod(q ** np.array(a), axis=-1) * np.prod(p ** np.array(b), axis=-1)
        return np.asarray(out)

    def __add__(self, other: "WeylSymbol") -> "WeylSymbol":
        return linear_combination([(1.0, self), (1.0, other)])

    def scaled(self, s: complex) -> "WeylSymbol":
        return linear_combination([(s, self)])

    @property
    def degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.coefficients), default=0)


def linear_combination(items) -> WeylSymbol:
    """sum_i s_i A_i for polynomial symbols."""
    items = list(items)
    layout = items[0][1].layout
    coeffs: dict = {}
    for s, sym in items:
        if sym.kind != "polynomial":
            raise ValueError("linear combinations are supported for polynomial symbols")
        for key, c in sym.coefficients.items():
            coeffs[key] = coeffs.get(key, 0.0) + s * c
    return WeylSymbol(layout, "polynomial", coeffs)


def monomial(layout: ModeLayout, a, b, coefficient: complex = 1.0) -> WeylSymbol:
    return WeylSymbol(layout, "polynomial", {(tuple(a), tuple(b)): coefficient})


def named_observable(name: str, layout: ModeLayout, mode: int = 0, omega: float = 1.0) -> WeylSymbol:
    """Symbols ``q``, ``p``, ``q2``, ``p2``, ``qp`` (for one mode) and ``energy:harmonic`` (all modes)."""
    nd = layout.nd
    e = lambda k: tuple(k if j == mode else 0 for j in range(nd))
    z = (0,) * nd
    table = {"q": (e(1), z), "p": (z, e(1)), "q2": (e(2), z), "p2": (z, e(2)), "qp": (e(1), e(1))}
    if name in table:
        a, b = table[name]
        return monomial(layout, a, b)
    if name == "energy:harmonic":
        coeffs = {}
        for j, m in enumerate(layout.masses):
            ej = tuple(2 if i == j else 0 for i in range(nd))
            coeffs[(z, ej)] = 0.5 / m
            coeffs[(ej, z)] = 0.5 * m * omega**2
        return WeylSymbol(layout, "polynomial", coeffs)
    raise ValueError(f"unknown observable {name!r}")


def _real(value: complex, tol: float = 1e-8) -> float:
    value = complex(value)
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise ValueError(f"average has imaginary part {value.imag:.2e}; symbol is not Hermitian")
    return value.real


def average_via_wigner(A: WeylSymbol, w: WignerGrid) -> float:
    """<A> = int A^W(q, p) W(q, p) dq dp (trapezoid rule)."""
    nd = w.layout.nd
    mesh = w.mesh()
    q = np.stack(mesh[:nd], axis=-1)
    p = np.stack(mesh[nd:], axis=-1)
    return _real(np.sum(A(q, p) * w.values * _cell_volume(w.grids)))


def characteristic_derivative(chi: Characteristic, orders) -> complex:
    """Mixed derivative of chi at the origin; ``orders`` has one entry per frame component."""
    cart = chi.cartesian
    if cart is None:
        raise ValueError("characteristic must be on a Cartesian frame grid")
    origin = cart.origin_index
    if origin is None:
        raise ValueError("the frame grid must contain the origin")
    grid = chi.on_grid()
    orders = tuple(int(o) for o in orders)
    active = cart.active
    comp_axes = {c: i for i, c in enumerate(active)}
    stencils = []
    for comp, o in enumerate(orders):
        if o == 0:
            continue
        if comp not in comp_axes:
            raise ValueError(f"frame component {comp} is not sampled")
        ax = comp_axes[comp]
        w = central_stencil(o)
        r = w.size // 2
        if origin[ax] - r < 0 or origin[ax] + r >= cart.axes[ax].n:
            raise ValueError("origin is too close to the frame-grid edge for the stencil")
        stencils.append((ax, w, r, cart.axes[ax].h ** o))
    total = 0.0 + 0.0j
    for combo in product(*[range(s[1].size) for s in stencils]):
        idx = list(origin)
        weight = 1.0
        for (ax, w, r, scale), i in zip(stencils, combo):
            idx[ax] = origin[ax] + i - r
            weight *= w[i] / scale
        if weight != 0.0:
            total += weight * grid[tuple(idx)]
    return total


def weyl_moment(chi: Characteristic, a, b) -> complex:
    """<q^a p^b>_Weyl from derivatives of chi at the origin."""
    a, b = tuple(a), tuple(b)
    n = sum(a) + sum(b)
    if n == 0:
        return 1.0 + 0.0j
    return (-1j) ** n * characteristic_derivative(chi, a + b)


def average_via_tomogram(A: WeylSymbol, chi: Characteristic | ComTomogram) -> float:
    """<A> for polynomial symbols from the tomogram characteristic."""
    if isinstance(chi, ComTomogram):
        chi = com_to_characteristic(chi)
    if A.kind != "polynomial":
        raise ValueError("the derivative route needs a polynomial symbol")
    total = 0.0 + 0.0j
    for (a, b), c in A.coefficients.items():
        total += c * weyl_moment(chi, a, b)
    return _real(total, tol=1e-6)


def position_density(chi: Characteristic, qgrids) -> np.ndarray:
    """rho(q, q) = (2 pi)^-Nd int chi(mu, 0) exp(-i mu.q) dmu from nu = 0 frames."""
    cart = chi.cartesian
    nd = chi.layout.nd
    if cart is None or any(a is not None for a in cart.nu_axes) or any(a is None for a in cart.mu_axes):
        raise ValueError("need a Cartesian grid over mu with nu fixed at 0")
    if isinstance(qgrids, AxisGrid):
        qgrids = (qgrids,) * nd
    arr = chi.on_grid()
    for ax, (src, dst) in enumerate(zip(cart.mu_axes, qgrids)):
        kern = np.exp(-1j * np.outer(src.points, dst.points)) * src.weights[:, None]
        arr = np.moveaxis(np.moveaxis(arr, ax, -1) @ kern, -1, ax)
    return (arr / TWO_PI**nd).real


def average_coordinate_operator(A: WeylSymbol | Callable, t: ComTomogram | Characteristic, qgrids) -> float:
    """<A(q)> = int A(q) rho(q, q) dq with the density recovered from (mu, 0) frames."""
    chi = com_to_characteristic(t) if isinstance(t, ComTomogram) else t
    nd = chi.layout.nd
    if isinstance(qgrids, AxisGrid):
        qgrids = (qgrids,) * nd
    if isinstance(A, WeylSymbol):
        if A.kind == "momentum" or (A.kind == "polynomial" and any(sum(b) for _, b in A.coefficients)):
            raise ValueError("symbol depends on momentum")
        fn = lambda q: A(q, np.zeros_like(q))
    else:
        fn = A
    dens = position_density(chi, qgrids)
    mesh = np.meshgrid(*[g.points for g in qgrids], indexing="ij")
    q = np.stack(mesh, axis=-1)
    return _real(np.sum(fn(q) * dens * _cell_volume(qgrids)))


def average_single_coordinate(A: Callable, t: ComTomogram, mode: int = 0) -> float:
    """<A(q_mode)> = int A(X) w(X, mu = e_mode, nu = 0) dX."""
    nd = t.layout.nd
    target = np.zeros(2 * nd)
    target[mode] = 1.0
    diffs = np.abs(t.frame_vectors - target).max(axis=1)
    i = int(np.argmin(diffs))
    if diffs[i] > 1e-12:
        raise KeyError(f"tomogram lacks the frame mu = e_{mode}, nu = 0")
    X = t.xgrid.points
    return float(trapezoid(np.asarray(A(X), dtype=float) * t.values[i], t.xgrid))
