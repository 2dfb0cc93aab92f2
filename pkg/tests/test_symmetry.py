import numpy as np
import pytest

from comtomo.core import AxisGrid, CartesianFrames, DensityMatrixGrid, InconsistentInputError, ModeLayout, WignerGrid
from comtomo.symmetry import (
    TwoParticleState,
    entire_permutation_check,
    mixed_swap_check,
    permute_density,
    richardson,
    statistics_sign,
    wigner_partial_permutation,
)
from comtomo.transforms import density_to_wigner, wigner_characteristic

G = AxisGrid.symmetric(5.4, 37)


def test_statistics_sign():
    assert statistics_sign("Bose") == 1 and statistics_sign("fermi") == -1 and statistics_sign(-1) == -1
    with pytest.raises(ValueError):
        statistics_sign("anyon")
    with pytest.raises(ValueError):
        statistics_sign(0)


def test_pair_validation():
    with pytest.raises(ValueError):
        TwoParticleState((1, 1), "fermi")
    with pytest.raises(ValueError):
        TwoParticleState((-1, 0), "bose")
    assert TwoParticleState((2, 2), "bose").components() == [(1.0, 2, 2)]


@pytest.mark.parametrize("orbitals,stats", [((0, 1), "fermi"), ((0, 2), "bose"), ((1, 3), "fermi")])
def test_wavefunction_exchange_and_norm(orbitals, stats):
    s = TwoParticleState(orbitals, stats)
    q = np.linspace(-7, 7, 141)
    psi = s.wavefunction(q[:, None], q[None, :])
    assert np.abs(psi - s.sign * psi.T).max() < 1e-14
    assert np.sum(psi**2) * (q[1] - q[0]) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_characteristic_matches_wigner_route():
    s = TwoParticleState((0, 1), "fermi")
    W = s.wigner(G)
    cart = CartesianFrames.square(2, 1.0, 3)
    num = wigner_characteristic(W, cart).on_grid()
    v = cart.vectors
    assert np.abs(num - s.characteristic(v[..., :2], v[..., 2:])).max() < 1e-8


def test_entire_swap_detects_distinguishable_pair():
    prod = TwoParticleState((0, 1), None)
    rho = prod.density(G)
    assert entire_permutation_check(rho) > 1e-2
    assert entire_permutation_check(TwoParticleState((0, 1), "fermi").density(G)) < 1e-12


def test_mixed_swap_detects_distinguishable_pair():
    W = TwoParticleState((0, 1), None).wigner(G)
    assert mixed_swap_check(W) > 1e-3


def test_permute_density_sides():
    rho = TwoParticleState((0, 1), "fermi").density(G)
    left = permute_density(rho, "left")
    assert np.abs(left + rho.values).max() < 1e-14
    right = permute_density(rho, "right")
    assert np.abs(right + rho.values).max() < 1e-14
    prod = TwoParticleState((0, 2), None).density(G).values
    manual = np.transpose(prod, (1, 0, 2, 3))
    got = permute_density(DensityMatrixGrid(ModeLayout(N=2, d=1), (G, G), prod, check=False), "left")
    assert np.abs(got - manual).max() < 1e-14


def test_partial_permutation_with_wrong_statistics_flips_sign():
    W = TwoParticleState((0, 1), "fermi").wigner(G)
    img = wigner_partial_permutation(W, "bose")
    assert np.abs(img.values + W.values).max() < 1e-3


def test_partial_permutation_of_product_state():
    # phi_a(q1) phi_b(q2) maps to a non-Hermitian operator: complex image
    W = TwoParticleState((0, 1), None).wigner(G)
    with pytest.raises(InconsistentInputError):
        wigner_partial_permutation(W, "bose")


def test_partial_permutation_matches_swapped_density_for_mixture():
    # equal mixture of the Bose and Fermi pairs: the partial swap exchanges them
    g = G
    b = TwoParticleState((0, 1), "bose").density(g).values
    f = TwoParticleState((0, 1), "fermi").density(g).values
    rho = DensityMatrixGrid(ModeLayout(N=2, d=1), (g, g), 0.5 * (b + f), check=False)
    W = density_to_wigner(rho, (g, g))
    img = wigner_partial_permutation(W, "bose")
    oracle = density_to_wigner(DensityMatrixGrid(rho.layout, rho.qgrids, 0.5 * (b - f), check=False), (g, g))
    assert np.abs(img.values - oracle.values).max() < 1e-3


def test_richardson_cancels_two_orders():
    f = lambda e: 2.0 + 3.0 * e - 5.0 * e**2
    assert richardson([f(0.1), f(0.05), f(0.025)]) == pytest.approx(2.0, abs=1e-13)


def test_pair_layout_required():
    from comtomo.states import FockStateParams

    from conftest import wigner_of

    W = wigner_of(FockStateParams([0]), AxisGrid.symmetric(4.0, 9))
    with pytest.raises(NotImplementedError):
        wigner_partial_permutation(W, "bose")
