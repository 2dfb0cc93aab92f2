import numpy as np
import pytest

from comtomo.core import (
    AxisGrid,
    CartesianFrames,
    CoverageError,
    DegenerateFrameError,
    Frame,
    InconsistentInputError,
    ModeLayout,
    SymplecticTomogram,
    WignerGrid,
    random_frames,
)
from comtomo.states import (
    CoherentStateParams,
    FockStateParams,
    GaussianStateParams,
    ThermalStateParams,
    analytic_density,
    analytic_tomogram,
    analytic_wavefunction,
    analytic_wigner,
)
from comtomo.transforms import (
    analytic_com,
    com_from_characteristic,
    com_to_characteristic,
    com_to_symplectic,
    com_to_wigner,
    density_to_wigner,
    pure_state_tomogram,
    symplectic_from_wigner,
    symplectic_ray_frames,
    symplectic_to_com,
    wigner_characteristic,
    wigner_to_com,
    wigner_to_density,
)

from conftest import chi_of, wigner_of

L1 = ModeLayout.modes(1)


def test_density_to_wigner_matches_closed_form():
    g = AxisGrid.symmetric(6.0, 49)
    for st in (FockStateParams([2]), ThermalStateParams([1.0], 0.8), CoherentStateParams([0.7 + 0.3j])):
        W = density_to_wigner(analytic_density(st, g), g)
        assert np.abs(W.values - wigner_of(st, g).values).max() < 1e-6


def test_wigner_to_density_round_trip():
    g = AxisGrid.symmetric(6.0, 49)
    rho = analytic_density(GaussianStateParams([0.4], [0.2], [1.2], [0.7]), g)
    back = wigner_to_density(density_to_wigner(rho, g))
    assert np.abs(back.values - rho.values).max() < 1e-8


def test_two_mode_density_to_wigner():
    g = AxisGrid.symmetric(5.0, 31)
    st = FockStateParams([0, 1])
    W = density_to_wigner(analytic_density(st, g), g)
    assert np.abs(W.values - wigner_of(st, g).values).max() < 1e-6


@pytest.mark.parametrize("method,tol", [("fourier", 1e-8), ("binning", 5e-2)])
def test_radon_routes_against_closed_form(method, tol, rng):
    st = FockStateParams([1])
    g = AxisGrid.symmetric(7.0, 141)
    frames = random_frames(1, 8, rng, 1.5)
    xg = AxisGrid.symmetric(12.0, 481)
    # binning ripples can dip below zero, so the sign guard is off here
    t = wigner_to_com(wigner_of(st, g), frames, xg, method=method, signed=True)
    ref = analytic_com(st, frames, xg)
    assert np.abs(t.values - ref.values).max() < tol


def test_radon_coverage_error():
    g = AxisGrid.symmetric(6.0, 61)
    W = wigner_of(CoherentStateParams([3.0]), g)
    with pytest.raises(CoverageError):
        wigner_to_com(W, [Frame((1.0,), (0.0,))], AxisGrid.symmetric(2.0, 81))


def test_negative_tomogram_from_non_state_rejected():
    g = AxisGrid.symmetric(6.0, 61)
    W = wigner_of(FockStateParams([1]), g)
    neg = WignerGrid(W.layout, W.qgrids, W.pgrids, -W.values)
    with pytest.raises(InconsistentInputError):
        wigner_to_com(neg, [Frame((1.0,), (0.0,))], AxisGrid.symmetric(10.0, 201))
    t = wigner_to_com(neg, [Frame((1.0,), (0.0,))], AxisGrid.symmetric(10.0, 201), signed=True)
    assert t.signed and t.values.min() < 0


def test_com_from_characteristic_matches_closed_form(rng):
    st = CoherentStateParams([0.5 + 1.0j])
    frames = random_frames(1, 6, rng, 2.0)
    xg = AxisGrid.symmetric(14.0, 561)
    from comtomo.states import analytic_characteristic

    t = com_from_characteristic(L1, lambda m, n: analytic_characteristic(st, m, n), frames, xg)
    assert np.abs(t.values - analytic_com(st, frames, xg).values).max() < 1e-10


def test_com_from_characteristic_flags_narrow_grid():
    from comtomo.states import analytic_characteristic

    st = ThermalStateParams([1.0], 0.1)
    with pytest.raises(CoverageError):
        com_from_characteristic(L1, lambda m, n: analytic_characteristic(st, m, n), [Frame((2.0,), (0.0,))], AxisGrid.symmetric(5.0, 201))


def test_characteristic_from_rows_and_from_wigner_agree():
    st = FockStateParams([1])
    cart = CartesianFrames.square(1, 3.0, 13)
    t = analytic_com(st, cart, AxisGrid.symmetric(25.0, 1001))
    a = com_to_characteristic(t)
    b = wigner_characteristic(wigner_of(st, AxisGrid.symmetric(7.0, 141)), cart)
    c = chi_of(st, cart)
    assert np.abs(a.values - c.values).max() < 1e-9
    assert np.abs(b.values - c.values).max() < 1e-9


def test_com_to_wigner_from_tomogram():
    st = FockStateParams([2])
    cart = CartesianFrames.square(1, 10.0, 81)
    t = analytic_com(st, cart, AxisGrid.symmetric(60.0, 2401))
    qg = AxisGrid.symmetric(5.0, 41)
    W = com_to_wigner(t, qg, qg)
    assert np.abs(W.values - wigner_of(st, qg).values).max() < 1e-4


def test_com_to_wigner_requires_decay():
    cart = CartesianFrames.square(1, 3.0, 25)
    qg = AxisGrid.symmetric(5.0, 21)
    with pytest.raises(CoverageError):
        com_to_wigner(chi_of(FockStateParams([1]), cart), qg, qg)


def test_symplectic_single_mode_is_identity(rng):
    st = GaussianStateParams([0.2], [0.1], [1.1], [0.8])
    frames = random_frames(1, 3, rng, 1.0)
    kg = AxisGrid.symmetric(30.0, 241)
    yg = AxisGrid.symmetric(8.0, 161)
    rays = [r for f in frames for r in symplectic_ray_frames(f, [kg])]
    t = analytic_com(st, rays + frames, AxisGrid.symmetric(250.0, 20001))
    ws = com_to_symplectic(t, frames, [kg], [yg])
    ref = np.array([analytic_tomogram(st, f, yg.points) for f in frames])
    assert np.abs(ws.values - ref).max() < 1e-6


def test_symplectic_missing_rays_raise_coverage():
    frames = [Frame((0.3,), (0.9,))]
    t = analytic_com(FockStateParams([0]), frames, AxisGrid.symmetric(10.0, 201))
    with pytest.raises(CoverageError):
        com_to_symplectic(t, frames, [AxisGrid.symmetric(4.0, 9)], [AxisGrid.symmetric(5.0, 11)])


def test_symplectic_to_com_two_modes():
    st = FockStateParams([0, 1])
    frames = [Frame((0.6, -0.4), (0.5, 0.9)), Frame((1.0, 0.3), (-0.2, 0.7))]
    yg = AxisGrid.symmetric(7.0, 141)
    Y1, Y2 = np.meshgrid(yg.points, yg.points, indexing="ij")
    vals = []
    for f in frames:
        a = analytic_tomogram(FockStateParams([0]), Frame((f.mu[0],), (f.nu[0],)), Y1)
        b = analytic_tomogram(FockStateParams([1]), Frame((f.mu[1],), (f.nu[1],)), Y2)
        vals.append(a * b)
    ws = SymplecticTomogram(ModeLayout.modes(2), frames, [yg, yg], np.array(vals))
    xg = AxisGrid.symmetric(10.0, 201)
    t = symplectic_to_com(ws, xg)
    assert np.abs(t.values - analytic_com(st, frames, xg).values).max() < 1e-6


def test_symplectic_from_wigner_product_state():
    st = FockStateParams([1, 0])
    g = AxisGrid.symmetric(6.0, 33)
    W = wigner_of(st, g)
    f = Frame((0.8, 0.5), (0.4, -0.9))
    yg = AxisGrid.symmetric(6.0, 21)
    # chi falls to about 5e-5 at |k| = 7, which sets the error floor
    kg = AxisGrid.symmetric(7.0, 29)
    ws = symplectic_from_wigner(W, [f], [yg, yg], [kg, kg])
    Y1, Y2 = np.meshgrid(yg.points, yg.points, indexing="ij")
    ref = analytic_tomogram(FockStateParams([1]), Frame((0.8,), (0.4,)), Y1) * analytic_tomogram(FockStateParams([0]), Frame((0.5,), (-0.9,)), Y2)
    assert np.abs(ws.values[0] - ref).max() < 2e-4


def test_pure_state_route_single_and_product():
    xg = AxisGrid.symmetric(10.0, 201)
    f1 = Frame((0.6,), (0.9,))
    st = FockStateParams([2])
    w = pure_state_tomogram(lambda q: analytic_wavefunction(st, q), f1, xg)
    assert np.abs(w - analytic_tomogram(st, f1, xg.points)).max() < 1e-8
    f2 = Frame((0.6, -0.3), (0.9, 0.8))
    st2 = FockStateParams([1, 0])
    psis = [lambda q: analytic_wavefunction(FockStateParams([1]), q[..., None]), lambda q: analytic_wavefunction(FockStateParams([0]), q[..., None])]
    w2 = pure_state_tomogram(psis, f2, xg)
    assert np.abs(w2 - analytic_tomogram(st2, f2, xg.points)).max() < 1e-6


def test_pure_state_route_rejects_nu_zero():
    with pytest.raises(DegenerateFrameError):
        pure_state_tomogram(lambda q: np.exp(-q[..., 0] ** 2 / 2), Frame((1.0,), (0.0,)), AxisGrid.symmetric(5.0, 11))
