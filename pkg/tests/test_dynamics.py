import numpy as np
import pytest

from comtomo.core import AxisGrid, CartesianFrames, InconsistentInputError, ModeLayout
from comtomo.dynamics import (
    PolynomialPotential,
    TomogramField,
    default_kgrid,
    eigen_residual,
    energy_scan,
    evolution_residual,
    moyal_consistency,
    moyal_propagate_quadratic,
    moyal_rhs,
    oscillator_log_z_derivative,
    potential_operator_terms,
    quadratic_flow,
    transition_probability,
)
from comtomo.states import (
    CoherentStateParams,
    FockStateParams,
    GaussianStateParams,
    ThermalStateParams,
    analytic_characteristic,
)
from comtomo.transforms import analytic_com

from conftest import chi_of, wigner_of

L1 = ModeLayout.modes(1)
QUARTIC = PolynomialPotential({(2,): 0.5, (3,): 0.05, (4,): 0.1})


def _field(st, frames, k):
    return TomogramField.from_characteristic(ModeLayout.modes(st.nd), frames, k, lambda m, v: analytic_characteristic(st, m, v))


def test_potential_rejects_bad_input():
    with pytest.raises(ValueError):
        PolynomialPotential({(5,): 1.0})
    with pytest.raises(ValueError):
        PolynomialPotential({(1, 1): 1.0}, nd=1)
    assert PolynomialPotential({"2,1": 0.3}, nd=2).coefficients == {(2, 1): 0.3}


def test_operator_terms_match_complex_expansion(rng):
    V = PolynomialPotential({(4, 0): 0.1, (1, 2): -0.4, (0, 3): 0.2, (1, 0): 1.5}, nd=2)
    re_t, im_t = potential_operator_terms(V)
    for _ in range(5):
        a, b = rng.normal(size=2), rng.normal(size=2)
        z = a + 1j * b
        exact = sum(c * z[0] ** k[0] * z[1] ** k[1] for k, c in V.coefficients.items())
        ev = lambda terms: sum(t.coefficient * np.prod(a ** np.array(t.a)) * np.prod(b ** np.array(t.b)) for t in terms)
        assert abs(ev(re_t) - exact.real) < 1e-12
        assert abs(ev(im_t) - exact.imag) < 1e-12


def test_quadratic_flow_harmonic_is_rotation():
    M, c = quadratic_flow(PolynomialPotential.harmonic(), [1.0], 0.4)
    ct, st = np.cos(0.4), np.sin(0.4)
    assert np.allclose(M, [[ct, st], [-st, ct]], atol=1e-13)
    assert np.allclose(c, 0.0)


def test_quadratic_flow_linear_force():
    M, c = quadratic_flow(PolynomialPotential({(1,): 0.3}), [2.0], 1.5)
    # p -> p - 0.3 t, q -> q + p t / m - 0.3 t^2 / (2m)
    assert np.allclose(M, [[1.0, 0.75], [0.0, 1.0]])
    assert np.allclose(c, [-0.3 * 1.5**2 / 4.0, -0.45])


@pytest.mark.parametrize("method,tol", [("shear", 1e-10), ("bilinear", 5e-3)])
def test_harmonic_flow_moves_coherent_state(method, tol):
    g = AxisGrid.symmetric(8.0, 129)
    a0 = 1.0 + 0.5j
    t = 0.9
    Wt = moyal_propagate_quadratic(wigner_of(CoherentStateParams([a0]), g), PolynomialPotential.harmonic(), t, method=method)
    # <q> + i<p> = sqrt2 conj(alpha) for this family, so alpha turns as exp(+it)
    ref = wigner_of(CoherentStateParams([a0 * np.exp(1j * t)]), g)
    assert np.abs(Wt.values - ref.values).max() < tol


def test_free_flow_spreads_gaussian():
    g = AxisGrid.symmetric(8.0, 129)
    st = GaussianStateParams([0.0], [0.0], [1.0], [1.0])
    W0 = wigner_of(st, g)
    t = 0.6
    Wt = moyal_propagate_quadratic(W0, PolynomialPotential.free(), t)
    Q, P = np.meshgrid(g.points, g.points, indexing="ij")
    ref = np.exp(-((Q - P * t) ** 2) - P**2) / np.pi
    assert np.abs(Wt.values - ref).max() < 1e-10


def test_shear_refuses_coupled_flow():
    g = AxisGrid.symmetric(4.0, 9)
    W = wigner_of(FockStateParams([0, 0]), g)
    with pytest.raises(ValueError):
        moyal_propagate_quadratic(W, PolynomialPotential({(1, 1): 0.2, (2, 0): 0.5, (0, 2): 0.5}, nd=2), 0.3)


def test_moyal_rhs_harmonic_matches_time_derivative():
    g = AxisGrid.symmetric(8.0, 129)
    a0, h = 0.8 - 0.3j, 1e-4
    rhs = moyal_rhs(wigner_of(CoherentStateParams([a0]), g), PolynomialPotential.harmonic())
    fd = (wigner_of(CoherentStateParams([a0 * np.exp(1j * h)]), g).values - wigner_of(CoherentStateParams([a0 * np.exp(-1j * h)]), g).values) / (2 * h)
    assert np.abs(rhs.values - fd).max() < 1e-7


@pytest.mark.parametrize("state", [CoherentStateParams([0.6 + 0.4j]), FockStateParams([1])])
def test_moyal_rhs_obeys_ehrenfest(state):
    g = AxisGrid.symmetric(9.0, 161)
    W = wigner_of(state, g)
    rhs = moyal_rhs(W, QUARTIC).values
    Q, P = W.mesh()
    cell = g.h**2
    dp = np.sum(P * rhs) * cell
    force = -np.sum((1.0 * Q + 0.15 * Q**2 + 0.4 * Q**3) * W.values) * cell
    assert abs(dp - force) < 1e-8
    assert abs(np.sum(Q * rhs) * cell - np.sum(P * W.values) * cell) < 1e-8
    assert abs(np.sum(rhs) * cell) < 1e-10


def test_moyal_consistency_is_sensitive_to_cubic_term():
    g = AxisGrid.symmetric(8.0, 129)
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    W = wigner_of(FockStateParams([1]), g)
    assert moyal_consistency(W, QUARTIC, fr, k).residual_real < 1e-3
    # the tomogram side uses the full potential, the Wigner side loses q^3 and q^4
    f = TomogramField.from_wigner(W, fr, k)
    dt = TomogramField.from_wigner(moyal_rhs(W, PolynomialPotential.harmonic()), fr, k)
    from comtomo.dynamics import evolution_terms, trust_region

    bad = np.abs(dt.values + evolution_terms(f, QUARTIC))[trust_region(fr)].max()
    assert bad > 1e-2


def test_eigen_residual_two_modes():
    fr = CartesianFrames.square(2, 2.0, 21)
    k = default_kgrid(1.0, 2)
    f = _field(FockStateParams([0, 1]), fr, k)
    V = PolynomialPotential.harmonic([1.0, 1.0])
    good = eigen_residual(f, V, 2.0)
    assert max(good.residual_real, good.residual_imag) < 1e-3
    assert eigen_residual(f, V, 2.5).residual_real > 1e-2


def test_eigen_residual_anisotropic_mass_and_frequency():
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    # Fock 1 of m = 1, omega = 1 is not stationary for omega = 2
    f = _field(FockStateParams([1]), fr, k)
    r = eigen_residual(f, PolynomialPotential.harmonic([2.0]), 3.0)
    assert r.residual_real > 1e-2


def test_energy_scan_resolves_each_level():
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    Es = np.round(np.arange(0.0, 4.0001, 0.01), 10)
    for n in (0, 2):
        scan = energy_scan(_field(FockStateParams([n]), fr, k), PolynomialPotential.harmonic(), Es)
        assert abs(Es[np.argmin(scan)] - (n + 0.5)) <= 0.01


def test_evolution_residual_rejects_wrong_potential():
    g = AxisGrid.symmetric(8.0, 129)
    fr = CartesianFrames.square(1, 3.0, 121)
    k = default_kgrid(1.0, 4)
    W = wigner_of(CoherentStateParams([1.0]), g)
    h = 1e-3
    fs = [TomogramField.from_wigner(moyal_propagate_quadratic(W, PolynomialPotential.harmonic(), 0.3 + s), fr, k) for s in (-h, 0, h)]
    assert evolution_residual(fs, PolynomialPotential.harmonic(), h).residual_real < 1e-3
    assert evolution_residual(fs, PolynomialPotential.harmonic([1.3]), h).residual_real > 1e-2


def test_log_z_derivative_matches_finite_difference():
    lnz = lambda b: -np.log(2 * np.sinh(0.5 * b)) - np.log(2 * np.sinh(b))
    h = 1e-5
    fd = (lnz(1.2 + h) - lnz(1.2 - h)) / (2 * h)
    assert abs(oscillator_log_z_derivative([1.0, 2.0], 1.2) - fd) < 1e-8


def test_field_from_com_matches_characteristic():
    cart = CartesianFrames.square(1, 1.0, 9)
    k = default_kgrid(1.0, 2)
    st = ThermalStateParams([1.0], 1.0)
    t = analytic_com(st, cart, AxisGrid.symmetric(20.0, 801))
    assert np.abs(TomogramField.from_com(t, k).values - _field(st, cart, k).values).max() < 1e-9


def test_field_validation():
    cart = CartesianFrames.square(1, 1.0, 5)
    with pytest.raises(ValueError):
        TomogramField(L1, cart, [0.0, 1.0], np.zeros((5, 5, 2)))
    with pytest.raises(ValueError):
        TomogramField(L1, cart, [1.0, 2.0], np.zeros((5, 5, 2)))


def test_transition_probability_contracts():
    a = chi_of(FockStateParams([0]), CartesianFrames.square(1, 8.0, 65))
    b = chi_of(FockStateParams([0]), CartesianFrames.square(1, 8.0, 33))
    with pytest.raises(ValueError):
        transition_probability(a, b)
    shifted = CartesianFrames((AxisGrid(-7.0, 8.0, 31),), (AxisGrid(-8.0, 8.0, 33),))
    c = chi_of(FockStateParams([0]), shifted)
    with pytest.raises(ValueError):
        transition_probability(c, c)


def test_transition_probability_flags_complex_result():
    cart = CartesianFrames.square(1, 8.0, 65)
    a = chi_of(FockStateParams([1]), cart)
    from comtomo.transforms import Characteristic

    twisted = Characteristic.from_grid(L1, cart, a.on_grid() * 1j)
    with pytest.raises(InconsistentInputError):
        transition_probability(twisted, a)
