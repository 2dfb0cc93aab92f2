"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
deviation and wall time, then asserts. Run on its own with

    python3 -m pytest tests/test_acceptance.py -v
"""
import time

import numpy as np

from comtomo.core import AxisGrid, CartesianFrames, DensityMatrixGrid, ModeLayout, check_normalization, random_frames
from comtomo.dynamics import (
    PolynomialPotential,
    TomogramField,
    default_kgrid,
    eigen_residual,
    energy_scan,
    evolution_residual,
    imaginary_time_residual,
    moyal_propagate_quadratic,
    oscillator_log_z_derivative,
    transition_probability,
)
from comtomo.observables import average_via_tomogram, average_via_wigner, named_observable
from comtomo.starprod import QuantizerContext, SymbolField, fidelity, operator_from_symbol, random_operator, star_product, symbol_field
from comtomo.states import (
    CoherentStateParams,
    FockStateParams,
    GaussianStateParams,
    ThermalStateParams,
    analytic_characteristic,
    analytic_density,
    analytic_tomogram,
)
from comtomo.symmetry import (
    TwoParticleState,
    entire_permutation_check,
    epsilon_sweep,
    mixed_swap_check,
    permute_density,
    wigner_partial_permutation,
)
from comtomo.transforms import analytic_com, com_to_wigner, density_to_wigner, wigner_characteristic, wigner_to_com

from conftest import chi_of, wigner_of

L1 = ModeLayout.modes(1)
L2 = ModeLayout.modes(2)


class Criterion:
    """Collects (label, deviation, tolerance) triples and reports one line."""

    def __init__(self, number, title, capsys):
        self.number, self.title, self.capsys = number, title, capsys
        self.items = []
        self.t0 = time.perf_counter()

    def check(self, label, value, tol):
        self.items.append((label, float(value), float(tol)))

    def finish(self):
        bad = [(l, v, t) for l, v, t in self.items if not v <= t]
        worst = max(self.items, key=lambda it: it[1] / it[2] if it[2] > 0 else (np.inf if it[1] > 0 else 0.0))
        status = "PASS" if not bad else "FAIL"
        line = (
            f"[{status}] criterion {self.number:>2} {self.title}: {len(self.items) - len(bad)}/{len(self.items)} checks, "
            f"worst {worst[0]} = {worst[1]:.3e} (tol {worst[2]:.0e}), {time.perf_counter() - self.t0:.1f}s"
        )
        with self.capsys.disabled():
            print("\n" + line)
        assert not bad, "; ".join(f"{l}: {v:.3e} > {t:.0e}" for l, v, t in bad)


def test_criterion_01_closed_form_vs_radon(capsys):
    c = Criterion(1, "closed form vs numerical Radon", capsys)
    frames = random_frames(2, 20, np.random.default_rng(1), 1.0)
    g = AxisGrid.symmetric(6.0, 31)
    xg = AxisGrid.symmetric(12.0, 241)
    states = {
        "gaussian": GaussianStateParams([0.3, -0.5], [0.2, 0.1], [1.3, 0.7], [0.9, 1.6]),
        "thermal": ThermalStateParams([1.0, 1.5], 1.0),
        "fock00": FockStateParams([0, 0]),
        "fock01": FockStateParams([0, 1]),
        "fock11": FockStateParams([1, 1]),
    }
    for name, st in states.items():
        num = wigner_to_com(wigner_of(st, g), frames, xg)
        c.check(name, np.abs(num.values - analytic_com(st, frames, xg, L2).values).max(), 1e-3)
    c.finish()


def test_criterion_02_normalization_homogeneity(capsys):
    c = Criterion(2, "normalization and homogeneity", capsys)
    frames = random_frames(2, 20, np.random.default_rng(0), 1.5)
    xg = AxisGrid.symmetric(25.0, 2001)
    X = np.linspace(-2.0, 2.0, 9)
    states = {
        "gaussian": GaussianStateParams([0.3, -0.5], [0.2, 0.1], [1.3, 0.7], [0.9, 1.6]),
        "thermal": ThermalStateParams([1.0, 1.5], 1.0),
        "fock01": FockStateParams([0, 1]),
        "fock11": FockStateParams([1, 1]),
        "coherent": CoherentStateParams([1 + 0.5j, -0.4j]),
    }
    for name, st in states.items():
        c.check(f"norm:{name}", check_normalization(analytic_com(st, frames, xg, L2)).max_deviation, 1e-6)
        worst = 0.0
        for lam in (-2.0, 0.5, 3.0):
            for f in frames:
                a = analytic_tomogram(st, f.scaled(lam), lam * X)
                worst = max(worst, float(np.abs(a - analytic_tomogram(st, f, X) / abs(lam)).max()))
        c.check(f"homogeneity:{name}", worst, 1e-10)
    c.finish()


def test_criterion_03_inversion(capsys):
    c = Criterion(3, "inversion fidelity and Wigner round trip", capsys)
    ctx = QuantizerContext(32)
    cart = CartesianFrames.square(1, 10.0, 81)
    for name, st in (("fock0", FockStateParams([0])), ("fock1", FockStateParams([1])), ("fock2", FockStateParams([2])), ("coherent1", CoherentStateParams([1.0]))):
        rho = operator_from_symbol(chi_of(st, cart), ctx)
        c.check(f"fidelity_defect:{name}", 1.0 - fidelity(rho, analytic_density(st, truncation=32)), 1e-4)
    # W -> tomogram -> W for Fock 1
    qg = AxisGrid.symmetric(6.0, 61)
    W = wigner_of(FockStateParams([1]), qg)
    back = com_to_wigner(wigner_characteristic(W, cart), qg, qg)
    c.check("wigner_round_trip:fock1", np.abs(back.values - W.values).max(), 1e-4)
    c.finish()


def test_criterion_04_eigenvalue_equation(capsys):
    c = Criterion(4, "stationary equation", capsys)
    V = PolynomialPotential.harmonic()
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    for n in range(4):
        st = FockStateParams([n])
        f = TomogramField.from_characteristic(L1, fr, k, lambda m, v: analytic_characteristic(st, m, v))
        r = eigen_residual(f, V, n + 0.5)
        c.check(f"residual:fock{n}", max(r.residual_real, r.residual_imag), 1e-4)
        Es = np.round(np.arange(n, n + 1.0001, 0.01), 10)
        best = Es[int(np.argmin(energy_scan(f, V, Es)))]
        c.check(f"scan_minimum:fock{n}", abs(best - (n + 0.5)), 0.01)
    c.finish()


def test_criterion_05_real_time_evolution(capsys):
    c = Criterion(5, "real-time evolution", capsys)
    V = PolynomialPotential.harmonic()
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    g = AxisGrid.symmetric(8.0, 129)
    W = wigner_of(CoherentStateParams([1 + 0.5j]), g)
    h = 1e-3
    fs = [TomogramField.from_wigner(moyal_propagate_quadratic(W, V, 0.7 + s), fr, k) for s in (-h, 0.0, h)]
    c.check("coherent_harmonic", evolution_residual(fs, V, h).residual_real, 1e-3)
    c.finish()


def test_criterion_06_imaginary_time(capsys):
    c = Criterion(6, "imaginary-time evolution", capsys)
    V = PolynomialPotential.harmonic()
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    h = 1e-3
    fs = [TomogramField.from_characteristic(L1, fr, k, lambda m, v, b=1.0 + s: analytic_characteristic(ThermalStateParams([1.0], b), m, v)) for s in (-h, 0.0, h)]
    r = imaginary_time_residual(fs, V, h, log_z_derivative=oscillator_log_z_derivative([1.0], 1.0))
    c.check("thermal_beta1", max(r.residual_real, r.residual_imag), 1e-3)
    c.finish()


def test_criterion_07_transitions(capsys):
    c = Criterion(7, "transition probabilities", capsys)
    cf = CartesianFrames.square(1, 8.0, 65)
    chis = [chi_of(FockStateParams([n]), cf) for n in range(3)]
    P = np.array([[transition_probability(a, b) for b in chis] for a in chis])
    c.check("fock012_identity", np.abs(P - np.eye(3)).max(), 1e-5)
    for a, b in [(0.5, 0.0), (1.0, 0.5j), (-0.3 + 0.2j, 0.7)]:
        p = transition_probability(chi_of(CoherentStateParams([a]), cf), chi_of(CoherentStateParams([b]), cf))
        c.check(f"coherent_overlap:{a}|{b}", abs(p - np.exp(-abs(a - b) ** 2)), 1e-5)
    th = chi_of(ThermalStateParams([1.0], 1.0), cf)
    c.check("thermal_purity", abs(transition_probability(th, th) - np.tanh(0.5)), 1e-3)
    c.finish()


def test_criterion_08_averages(capsys):
    c = Criterion(8, "averages", capsys)
    cart = CartesianFrames.square(1, 0.3, 25)
    g = AxisGrid.symmetric(8.0, 161)
    names = ("q", "p", "q2", "p2", "qp", "energy:harmonic")
    q2 = named_observable("q2", L1)
    for n in range(3):
        st = FockStateParams([n])
        c.check(f"q2:fock{n}", abs(average_via_tomogram(q2, chi_of(st, cart)) - (n + 0.5)), 1e-4)
    th = ThermalStateParams([1.0], 1.0)
    c.check("q2:thermal", abs(average_via_tomogram(q2, chi_of(th, cart)) - 0.5 / np.tanh(0.5)), 1e-4)
    for label, st in (("fock1", FockStateParams([1])), ("thermal", th), ("gaussian", GaussianStateParams([0.4], [-0.3], [1.4], [0.9]))):
        chi, W = chi_of(st, cart), wigner_of(st, g)
        worst = max(abs(average_via_wigner(named_observable(n, L1), W) - average_via_tomogram(named_observable(n, L1), chi)) for n in names)
        c.check(f"wigner_vs_tomogram:{label}", worst, 1e-4)
    c.finish()


def test_criterion_09_permutation_symmetry(capsys):
    c = Criterion(9, "permutation symmetry", capsys)
    g = AxisGrid.symmetric(5.4, 37)
    fermi = TwoParticleState((0, 1), "fermi")
    rho = fermi.density(g)
    W = density_to_wigner(rho, (g, g))
    c.check("entire:density", entire_permutation_check(rho), 1e-10)
    c.check("entire:wigner", entire_permutation_check(W), 1e-10)
    c.check("mixed:wigner", mixed_swap_check(W), 1e-10)
    t = fermi.tomogram(CartesianFrames.square(2, 1.2, 5), AxisGrid.symmetric(12.0, 241))
    c.check("entire:tomogram", entire_permutation_check(t), 1e-10)
    img = wigner_partial_permutation(W, "fermi")
    perm = DensityMatrixGrid(rho.layout, rho.qgrids, fermi.sign * permute_density(rho), check=False)
    c.check("partial_kernel_vs_oracle", np.abs(img.values - density_to_wigner(perm, (g, g)).values).max(), 1e-3)
    frames = random_frames(2, 3, np.random.default_rng(3), 1.0)
    ref = fermi.tomogram(frames, AxisGrid.symmetric(10.0, 401))
    sweep = epsilon_sweep(fermi.characteristic, "fermi", ref, n_ab=97, half_width=12.0)
    d = sweep["deviations"]
    c.check("epsilon_monotone(" + ",".join(f"{x:.3f}" for x in d) + ")", 0.0 if sweep["monotone"] else 1.0, 0.0)
    c.finish()


def test_criterion_10_star_product(capsys):
    c = Criterion(10, "star product", capsys)
    ctx = QuantizerContext(32)
    cart = CartesianFrames.square(1, 10.0, 81)
    for name, st in (("fock0", FockStateParams([0])), ("fock1", FockStateParams([1])), ("coherent1", CoherentStateParams([1.0]))):
        f = SymbolField.from_characteristic(chi_of(st, cart))
        c.check(f"idempotence:{name}", star_product(f, f, ctx).max_diff(f), 1e-3)
    rng = np.random.default_rng(7)
    fA, fB, fC = (symbol_field(random_operator(32, 2, 6, rng), ctx, cart) for _ in range(3))
    left = star_product(star_product(fA, fB, ctx), fC, ctx)
    right = star_product(fA, star_product(fB, fC, ctx), ctx)
    c.check("associativity", left.max_diff(right), 1e-3)
    c.finish()
