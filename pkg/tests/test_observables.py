import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comtomo.core import AxisGrid, CartesianFrames, Frame, ModeLayout
from comtomo.observables import (
    WeylSymbol,
    average_coordinate_operator,
    average_single_coordinate,
    average_via_tomogram,
    average_via_wigner,
    linear_combination,
    monomial,
    named_observable,
    position_density,
    weyl_moment,
)
from comtomo.states import CoherentStateParams, FockStateParams, GaussianStateParams, ThermalStateParams, analytic_wavefunction
from comtomo.transforms import analytic_com

from conftest import chi_of, wigner_of

L1 = ModeLayout.modes(1)
CART = CartesianFrames.square(1, 0.3, 25)


def test_symbol_validation():
    with pytest.raises(ValueError):
        WeylSymbol(L1, "other")
    with pytest.raises(ValueError):
        WeylSymbol(L1, "coordinate")
    with pytest.raises(ValueError):
        monomial(L1, (3,), (2,))
    with pytest.raises(ValueError):
        named_observable("q3", L1)


def test_linear_combination_and_degree():
    s = named_observable("q2", L1) + named_observable("p2", L1).scaled(2.0)
    assert s.degree == 2
    assert s(np.array([2.0]), np.array([1.0])) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        linear_combination([(1.0, WeylSymbol(L1, "coordinate", function=np.cos))])


@given(x=st.floats(-1.5, 1.5), y=st.floats(-1.5, 1.5), A=st.floats(0.5, 2.0), B=st.floats(0.5, 2.0))
@settings(max_examples=15, deadline=None)
def test_gaussian_moments_from_tomogram(x, y, A, B):
    chi = chi_of(GaussianStateParams([x], [y], [A], [B]), CART)
    assert average_via_tomogram(named_observable("q", L1), chi) == pytest.approx(x, abs=1e-6)
    assert average_via_tomogram(named_observable("p", L1), chi) == pytest.approx(y, abs=1e-6)
    assert average_via_tomogram(named_observable("q2", L1), chi) == pytest.approx(x**2 + 0.5 / A, abs=1e-5)
    assert average_via_tomogram(named_observable("qp", L1), chi) == pytest.approx(x * y, abs=1e-5)


def test_fourth_moment_of_gaussian():
    x, A = 0.4, 1.3
    s2 = 0.5 / A
    chi = chi_of(GaussianStateParams([x], [0.0], [A], [1.0]), CartesianFrames.square(1, 0.6, 25))
    q4 = average_via_tomogram(monomial(L1, (4,), (0,)), chi)
    assert q4 == pytest.approx(x**4 + 6 * x**2 * s2 + 3 * s2**2, abs=1e-4)


def test_coherent_means_and_energy():
    a = 0.7 - 0.4j
    chi = chi_of(CoherentStateParams([a]), CART)
    assert average_via_tomogram(named_observable("q", L1), chi) == pytest.approx(np.sqrt(2) * a.real, abs=1e-6)
    assert average_via_tomogram(named_observable("p", L1), chi) == pytest.approx(-np.sqrt(2) * a.imag, abs=1e-6)
    assert average_via_tomogram(named_observable("energy:harmonic", L1), chi) == pytest.approx(abs(a) ** 2 + 0.5, abs=1e-5)


def test_thermal_energy_and_wigner_route():
    beta = 0.8
    th = ThermalStateParams([1.0], beta)
    E = 0.5 / np.tanh(0.5 * beta)
    H = named_observable("energy:harmonic", L1)
    assert average_via_tomogram(H, chi_of(th, CART)) == pytest.approx(E, abs=1e-4)
    assert average_via_wigner(H, wigner_of(th, AxisGrid.symmetric(10.0, 201))) == pytest.approx(E, abs=1e-6)


def test_two_mode_cross_moment():
    st2 = GaussianStateParams([0.5, -0.8], [0.1, 0.3], [1.0, 1.2], [1.0, 0.9])
    L2 = ModeLayout.modes(2)
    chi = chi_of(st2, CartesianFrames.square(2, 0.3, 9))
    assert average_via_tomogram(monomial(L2, (1, 1), (0, 0)), chi) == pytest.approx(-0.4, abs=1e-5)
    assert average_via_tomogram(monomial(L2, (0, 1), (1, 0)), chi) == pytest.approx(-0.08, abs=1e-5)


def test_weyl_moment_zero_order_and_edge():
    chi = chi_of(FockStateParams([1]), CartesianFrames.square(1, 0.3, 3))
    assert weyl_moment(chi, (0,), (0,)) == 1.0
    with pytest.raises(ValueError):
        weyl_moment(chi, (4,), (0,))


def test_non_hermitian_symbol_rejected():
    chi = chi_of(CoherentStateParams([0.5 + 0.5j]), CART)
    with pytest.raises(ValueError):
        average_via_tomogram(monomial(L1, (1,), (0,), 1j), chi)


def test_position_density_matches_wavefunction():
    cart = CartesianFrames((AxisGrid.symmetric(12.0, 241),), (None,))
    st2 = FockStateParams([2])
    qg = AxisGrid.symmetric(5.0, 51)
    dens = position_density(chi_of(st2, cart), qg)
    assert np.abs(dens - np.abs(analytic_wavefunction(st2, qg.points[:, None])) ** 2).max() < 1e-8


def test_coordinate_operator_average():
    x, A = 0.6, 0.9
    cart = CartesianFrames((AxisGrid.symmetric(12.0, 241),), (None,))
    chi = chi_of(GaussianStateParams([x], [0.2], [A], [1.5]), cart)
    qg = AxisGrid.symmetric(9.0, 361)
    val = average_coordinate_operator(lambda q: np.cos(q[..., 0]), chi, qg)
    assert val == pytest.approx(np.cos(x) * np.exp(-0.25 / A), abs=1e-8)
    with pytest.raises(ValueError):
        average_coordinate_operator(named_observable("p2", L1), chi, qg)


def test_single_coordinate_average_from_rows():
    st1 = FockStateParams([1])
    t = analytic_com(st1, [Frame((0.3,), (0.5,)), Frame((1.0,), (0.0,))], AxisGrid.symmetric(10.0, 401))
    assert average_single_coordinate(lambda X: X**2, t) == pytest.approx(1.5, abs=1e-8)
    t2 = analytic_com(st1, [Frame((0.3,), (0.5,))], AxisGrid.symmetric(10.0, 401))
    with pytest.raises(KeyError):
        average_single_coordinate(lambda X: X**2, t2)
