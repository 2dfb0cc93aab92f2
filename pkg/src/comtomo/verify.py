"""Invariant suites run by ``comtomo verify``.

Every check reduces to a measured deviation and a tolerance; it passes when
the deviation does not exceed the tolerance. Fidelities are reported as
defects 1 - F so the same rule applies.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .core import (
    AxisGrid,
    CartesianFrames,
    DegenerateFrameError,
    Frame,
    ModeLayout,
    WignerGrid,
    check_normalization,
    random_frames,
)
from .dynamics import (
    PolynomialPotential,
    TomogramField,
    default_kgrid,
    eigen_residual,
    energy_scan,
    evolution_residual,
    imaginary_time_residual,
    moyal_consistency,
    moyal_propagate_quadratic,
    oscillator_log_z_derivative,
    transition_probability,
)
from .observables import average_via_tomogram, average_via_wigner, named_observable
from .states import (
    CoherentStateParams,
    FockStateParams,
    GaussianStateParams,
    ThermalStateParams,
    analytic_characteristic,
    analytic_density,
    analytic_tomogram,
    analytic_wigner,
)
from .transforms import analytic_com, characteristic_on_grid, com_to_wigner, wigner_to_com

SUITES = ("core", "transforms", "dynamics", "observables", "symmetry", "starprod")


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tolerance: float

    def __post_init__(self):
        self.value = float(self.value)
        self.tolerance = float(self.tolerance)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.passed
        return d


def _families(nd: int = 2) -> dict:
    return {
        "gaussian": GaussianStateParams([0.3, -0.5][:nd], [0.2, 0.1][:nd], [1.3, 0.7][:nd], [0.9, 1.6][:nd]),
        "thermal": ThermalStateParams([1.0, 1.5][:nd], 1.0),
        "fock": FockStateParams([0, 1][:nd]) if nd == 2 else FockStateParams([1]),
        "coherent": CoherentStateParams([1 + 0.5j, -0.4j][:nd]),
    }


def _chi(state, layout, cart):
    return characteristic_on_grid(layout, cart, lambda m, n: analytic_characteristic(state, m, n))


def suite_core(tol: float | None = None) -> list[Check]:
    out = []
    rng = np.random.default_rng(0)
    L = ModeLayout.modes(2)
    frames = random_frames(2, 20, rng, 1.5)
    xg = AxisGrid.symmetric(25.0, 2001)
    for name, st in _families().items():
        t = analytic_com(st, frames, xg, L)
        out.append(Check("core", f"normalization:{name}", check_normalization(t).max_deviation, tol or 1e-6))
        worst = 0.0
        for lam in (-2.0, 0.5, 3.0):
            for f in frames[:5]:
                X = np.linspace(-2, 2, 9)
                a = analytic_tomogram(st, f.scaled(lam), lam * X)
                b = analytic_tomogram(st, f, X) / abs(lam)
                worst = max(worst, float(np.abs(a - b).max()))
        out.append(Check("core", f"homogeneity:{name}", worst, tol or 1e-10))
    try:
        Frame((0.0, 0.0), (0.0, 0.0)).require_nondegenerate()
        rejected = 1.0
    except DegenerateFrameError:
        rejected = 0.0
    out.append(Check("core", "degenerate_frame_rejected", rejected, 0.0))
    return out


def suite_transforms(tol: float | None = None) -> list[Check]:
    out = []
    rng = np.random.default_rng(1)
    L = ModeLayout.modes(2)
    g = AxisGrid.symmetric(6.0, 31)
    frames = random_frames(2, 20, rng, 1.0)
    xg = AxisGrid.symmetric(12.0, 241)
    for name, st in _families().items():
        W = WignerGrid.from_function(L, (g, g), (g, g), lambda q, p: analytic_wigner(st, np.stack(q, -1), np.stack(p, -1)))
        num = wigner_to_com(W, frames, xg)
        ref = analytic_com(st, frames, xg, L)
        out.append(Check("transforms", f"radon_vs_closed_form:{name}", float(np.abs(num.values - ref.values).max()), tol or 1e-3))
    L1 = ModeLayout.modes(1)
    cart = CartesianFrames.square(1, 10.0, 81)
    st = FockStateParams([1])
    qg = AxisGrid.symmetric(6.0, 61)
    W = com_to_wigner(_chi(st, L1, cart), qg, qg)
    exact = analytic_wigner(st, qg.points[:, None, None], qg.points[None, :, None])
    out.append(Check("transforms", "characteristic_to_wigner:fock1", float(np.abs(W.values - exact).max()), tol or 1e-4))
    return out


QUARTIC = PolynomialPotential({(2,): 0.5, (3,): 0.05, (4,): 0.1})


def suite_dynamics(tol: float | None = None, potential: PolynomialPotential | None = None) -> list[Check]:
    """Stationary, real-time, imaginary-time and transition checks.

    ``potential`` (one mode) replaces the anharmonic potential used for the
    Moyal-series evolution check; degree <= 2 potentials also get an
    exact-flow evolution check.
    """
    out = []
    L = ModeLayout.modes(1)
    V = PolynomialPotential.harmonic()
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    for n in range(4):
        st = FockStateParams([n])
        f = TomogramField.from_characteristic(L, fr, k, lambda m, v: analytic_characteristic(st, m, v))
        r = eigen_residual(f, V, n + 0.5)
        out.append(Check("dynamics", f"eigen:fock{n}", max(r.residual_real, r.residual_imag), tol or 1e-4))
        Es = np.round(np.arange(n, n + 1.0001, 0.01), 10)
        best = Es[int(np.argmin(energy_scan(f, V, Es)))]
        out.append(Check("dynamics", f"energy_scan_minimum:fock{n}", abs(best - (n + 0.5)), tol or 0.01))
    g = AxisGrid.symmetric(8.0, 129)
    st = CoherentStateParams([1 + 0.5j])
    W = WignerGrid.from_function(L, [g], [g], lambda q, p: analytic_wigner(st, np.stack(q, -1), np.stack(p, -1)))
    h = 1e-3
    fs = [TomogramField.from_wigner(moyal_propagate_quadratic(W, V, 0.7 + s), fr, k) for s in (-h, 0.0, h)]
    out.append(Check("dynamics", "evolution:coherent_harmonic", evolution_residual(fs, V, h).residual_real, tol or 1e-3))
    U = QUARTIC if potential is None else potential
    if U.nd != 1:
        raise ValueError("the dynamics suite takes a single-mode potential")
    label = f"degree{U.degree}"
    for name, st in (("coherent", st), ("fock1", FockStateParams([1]))):
        Wst = WignerGrid.from_function(L, [g], [g], lambda q, p: analytic_wigner(st, np.stack(q, -1), np.stack(p, -1)))
        r = moyal_consistency(Wst, U, fr, k)
        out.append(Check("dynamics", f"evolution_moyal:{label}:{name}", r.residual_real, tol or 1e-3))
    if potential is not None and U.degree <= 2:
        fs = [TomogramField.from_wigner(moyal_propagate_quadratic(W, U, 0.7 + s), fr, k) for s in (-h, 0.0, h)]
        out.append(Check("dynamics", f"evolution:coherent_{label}", evolution_residual(fs, U, h).residual_real, tol or 1e-3))
    fs = [
        TomogramField.from_characteristic(L, fr, k, lambda m, v, b=1.0 + s: analytic_characteristic(ThermalStateParams([1.0], b), m, v))
        for s in (-h, 0.0, h)
    ]
    r = imaginary_time_residual(fs, V, h, log_z_derivative=oscillator_log_z_derivative([1.0], 1.0))
    out.append(Check("dynamics", "imaginary_time:thermal", max(r.residual_real, r.residual_imag), tol or 1e-3))
    cf = CartesianFrames.square(1, 8.0, 65)
    chis = [_chi(FockStateParams([n]), L, cf) for n in range(3)]
    P = np.array([[transition_probability(a, b) for b in chis] for a in chis])
    out.append(Check("dynamics", "transition_matrix:fock012", float(np.abs(P - np.eye(3)).max()), tol or 1e-5))
    worst = 0.0
    for a, b in [(0.5, 0.0), (1.0, 0.5j), (-0.3 + 0.2j, 0.7)]:
        ca, cb = _chi(CoherentStateParams([a]), L, cf), _chi(CoherentStateParams([b]), L, cf)
        worst = max(worst, abs(transition_probability(ca, cb) - np.exp(-abs(a - b) ** 2)))
    out.append(Check("dynamics", "coherent_overlap", worst, tol or 1e-5))
    th = _chi(ThermalStateParams([1.0], 1.0), L, cf)
    out.append(Check("dynamics", "thermal_purity", abs(transition_probability(th, th) - np.tanh(0.5)), tol or 1e-3))
    return out


def suite_observables(tol: float | None = None) -> list[Check]:
    out = []
    L = ModeLayout.modes(1)
    cart = CartesianFrames.square(1, 0.3, 25)
    g = AxisGrid.symmetric(8.0, 161)
    names = ("q", "p", "q2", "p2", "qp", "energy:harmonic")
    states = {
        "fock0": FockStateParams([0]),
        "fock1": FockStateParams([1]),
        "fock2": FockStateParams([2]),
        "thermal": ThermalStateParams([1.0], 1.0),
        "gaussian": GaussianStateParams([0.4], [-0.3], [1.4], [0.9]),
    }
    for label, st in states.items():
        chi = _chi(st, L, cart)
        W = WignerGrid.from_function(L, [g], [g], lambda q, p: analytic_wigner(st, np.stack(q, -1), np.stack(p, -1)))
        worst = max(abs(average_via_wigner(named_observable(n, L), W) - average_via_tomogram(named_observable(n, L), chi)) for n in names)
        out.append(Check("observables", f"wigner_vs_tomogram:{label}", worst, tol or 1e-4))
        q2 = average_via_tomogram(named_observable("q2", L), chi)
        if label.startswith("fock"):
            n = int(label[-1])
            out.append(Check("observables", f"q2:{label}", abs(q2 - (n + 0.5)), tol or 1e-4))
        if label == "thermal":
            out.append(Check("observables", "q2:thermal", abs(q2 - 0.5 / np.tanh(0.5)), tol or 1e-4))
    return out


def suite_symmetry(tol: float | None = None) -> list[Check]:
    from .core import DensityMatrixGrid
    from .symmetry import (
        TwoParticleState,
        entire_permutation_check,
        epsilon_sweep,
        mixed_swap_check,
        permute_density,
        wigner_partial_permutation,
    )
    from .transforms import density_to_wigner

    out = []
    g = AxisGrid.symmetric(5.4, 37)
    fermi = TwoParticleState((0, 1), "fermi")
    bose = TwoParticleState((0, 2), "bose")
    for label, st in (("fermi", fermi), ("bose", bose)):
        rho = st.density(g)
        W = density_to_wigner(rho, (g, g))
        out.append(Check("symmetry", f"entire:density:{label}", entire_permutation_check(rho), tol or 1e-10))
        out.append(Check("symmetry", f"entire:wigner:{label}", entire_permutation_check(W), tol or 1e-10))
        out.append(Check("symmetry", f"mixed:wigner:{label}", mixed_swap_check(W), tol or 1e-10))
        img = wigner_partial_permutation(W, label)
        perm = DensityMatrixGrid(rho.layout, rho.qgrids, st.sign * permute_density(rho), check=False)
        oracle = density_to_wigner(perm, (g, g))
        out.append(Check("symmetry", f"partial_kernel_vs_oracle:{label}", float(np.abs(img.values - oracle.values).max()), tol or 1e-3))
    cart = CartesianFrames.square(2, 1.2, 5)
    t = fermi.tomogram(cart, AxisGrid.symmetric(12.0, 241))
    out.append(Check("symmetry", "entire:tomogram:fermi", entire_permutation_check(t), tol or 1e-10))
    out.append(Check("symmetry", "mixed:tomogram:fermi", mixed_swap_check(t), tol or 1e-10))
    frames = random_frames(2, 3, np.random.default_rng(3), 1.0)
    ref = fermi.tomogram(frames, AxisGrid.symmetric(10.0, 401))
    sweep = epsilon_sweep(fermi.characteristic, "fermi", ref, n_ab=97, half_width=12.0)
    out.append(Check("symmetry", "kernel_epsilon_monotone", 0.0 if sweep["monotone"] else 1.0, 0.0))
    out.append(Check("symmetry", "kernel_richardson", sweep["extrapolated"], tol or 5e-2))
    return out


def suite_starprod(tol: float | None = None) -> list[Check]:
    from .starprod import QuantizerContext, SymbolField, fidelity, operator_from_symbol, random_operator, star_product, symbol_field

    out = []
    L = ModeLayout.modes(1)
    ctx = QuantizerContext(32)
    cart = CartesianFrames.square(1, 10.0, 81)
    for label, st in (("fock0", FockStateParams([0])), ("fock1", FockStateParams([1])), ("fock2", FockStateParams([2])), ("coherent1", CoherentStateParams([1.0]))):
        chi = _chi(st, L, cart)
        rho = operator_from_symbol(chi, ctx)
        out.append(Check("starprod", f"fidelity_defect:{label}", 1.0 - fidelity(rho, analytic_density(st, truncation=32)), tol or 1e-4))
        f = SymbolField.from_characteristic(chi)
        out.append(Check("starprod", f"idempotence:{label}", star_product(f, f, ctx).max_diff(f), tol or 1e-3))
    rng = np.random.default_rng(7)
    fA, fB, fC = (symbol_field(random_operator(32, 2, 6, rng), ctx, cart) for _ in range(3))
    left = star_product(star_product(fA, fB, ctx), fC, ctx)
    right = star_product(fA, star_product(fB, fC, ctx), ctx)
    out.append(Check("starprod", "associativity", left.max_diff(right), tol or 1e-3))
    return out


_SUITES: dict[str, Callable] = {
    "core": suite_core,
    "transforms": suite_transforms,
    "dynamics": suite_dynamics,
    "observables": suite_observables,
    "symmetry": suite_symmetry,
    "starprod": suite_starprod,
}


def run_suite(name: str, tol: float | None = None, potential: PolynomialPotential | None = None) -> list[Check]:
    """Checks of one suite, or of every suite for ``name="all"``.

    ``tol`` replaces every tolerance; ``potential`` is passed to the dynamics suite.
    """
    if name != "all" and name not in _SUITES:
        raise ValueError(f"unknown suite {name!r}")
    out = []
    for s in SUITES if name == "all" else (name,):
        out += _SUITES[s](tol, potential) if s == "dynamics" else _SUITES[s](tol)
    return out
