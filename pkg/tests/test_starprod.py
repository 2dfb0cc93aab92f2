import numpy as np
import pytest
from scipy.linalg import expm

from comtomo.core import AxisGrid, CartesianFrames, FockMatrix, Frame
from comtomo.starprod import (
    QuantizerContext,
    SymbolField,
    TruncationError,
    displacement_matrix,
    fidelity,
    identity_symbol,
    operator_from_symbol,
    purity,
    random_operator,
    reconstruction_report,
    star_product,
    symbol_field,
    symbol_from_operator,
)
from comtomo.states import CoherentStateParams, FockStateParams, ThermalStateParams, analytic_characteristic, analytic_density
from comtomo.transforms import analytic_com

from conftest import chi_of

CART = CartesianFrames.square(1, 10.0, 81)


@pytest.fixture(scope="module")
def ctx():
    c = QuantizerContext(32)
    c.build(CART)
    return c


def test_displacement_matrix_against_expm():
    M = 60
    a = np.diag(np.sqrt(np.arange(1, M)), 1)
    q, p = (a + a.T) / np.sqrt(2), (a - a.T) / (1j * np.sqrt(2))
    ref = expm(1j * (0.7 * q - 0.4 * p))
    D = displacement_matrix(M, 0.7, -0.4)
    assert np.abs(D[:12, :12] - ref[:12, :12]).max() < 1e-10


def test_low_block_is_unitary(ctx):
    assert ctx.unitarity_defect(1.2, -0.5) < 1e-7
    with pytest.raises(ValueError):
        QuantizerContext(1)


def test_trace_symbol_is_characteristic(ctx):
    st = ThermalStateParams([1.0], 1.3)
    mu, nu = np.array([0.3, -1.1, 2.0]), np.array([0.5, 0.2, -0.7])
    got = ctx.trace_symbol(analytic_density(st, truncation=32), mu, nu)
    assert np.abs(got - analytic_characteristic(st, mu[:, None], nu[:, None])).max() < 1e-10


def test_symbol_from_operator_matches_closed_form(ctx):
    st = FockStateParams([2])
    frames = [Frame((0.4,), (0.9,)), Frame((1.0,), (0.0,))]
    xg = AxisGrid.symmetric(10.0, 401)
    t = symbol_from_operator(analytic_density(st, truncation=32), ctx, frames, xg)
    assert np.abs(t.values - analytic_com(st, frames, xg).values).max() < 1e-9
    with pytest.raises(ValueError):
        symbol_from_operator(FockMatrix(32, np.diag(np.r_[1.0, -1.0, np.zeros(30)])), ctx, frames, xg)


@pytest.mark.parametrize("state", [FockStateParams([3]), CoherentStateParams([0.8 - 0.6j]), ThermalStateParams([1.0], 2.0)])
def test_reconstruction(ctx, state):
    rho = operator_from_symbol(chi_of(state, CART), ctx)
    target = analytic_density(state, truncation=32)
    assert np.abs(rho.values - target.values).max() < 1e-6


def test_reconstruction_from_tomogram(ctx):
    st = FockStateParams([1])
    t = analytic_com(st, CART, AxisGrid.symmetric(60.0, 2401))
    rho = operator_from_symbol(t, ctx)
    assert 1.0 - fidelity(rho, analytic_density(st, truncation=32)) < 1e-6


def test_truncation_error_for_wide_state():
    small = QuantizerContext(8)
    with pytest.raises(TruncationError):
        operator_from_symbol(chi_of(CoherentStateParams([3.0]), CART), small)


def test_identity_is_neutral(ctx):
    f = SymbolField.from_characteristic(chi_of(FockStateParams([1]), CART))
    one = identity_symbol(CART)
    assert star_product(one, f, ctx).max_diff(f) < 1e-8
    assert star_product(f, one, ctx).max_diff(f) < 1e-8


def test_star_product_is_operator_product(ctx, rng):
    A, B = random_operator(32, 2, 6, rng), random_operator(32, 3, 6, rng)
    fA, fB = symbol_field(A, ctx, CART), symbol_field(B, ctx, CART)
    prod = star_product(fA, fB, ctx)
    ref = symbol_field(FockMatrix(32, A.values @ B.values), ctx, CART)
    assert prod.max_diff(ref) < 1e-6
    # q and p do not commute, so neither do generic symbols
    assert star_product(fB, fA, ctx).max_diff(prod) > 1e-3


def test_purity_and_fidelity_of_mixed_state(ctx):
    beta = 1.0
    rho = operator_from_symbol(chi_of(ThermalStateParams([1.0], beta), CART), ctx)
    assert purity(chi_of(ThermalStateParams([1.0], beta), CART), ctx) == pytest.approx(np.tanh(beta / 2), abs=1e-6)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-6)


def test_reconstruction_report(ctx):
    rep = reconstruction_report(chi_of(FockStateParams([0]), CART), ctx, analytic_density(FockStateParams([0]), truncation=32))
    assert rep["trace"] == pytest.approx(1.0, abs=1e-8)
    assert rep["purity"] == pytest.approx(1.0, abs=1e-8)
    assert rep["fidelity"] == pytest.approx(1.0, abs=1e-8)
    assert rep["top_level_population"] < 1e-12


def test_symbol_field_validation():
    with pytest.raises(ValueError):
        SymbolField(CART, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        SymbolField(CartesianFrames.square(2, 1.0, 3), np.zeros((3, 3, 3, 3)))
    with pytest.raises(ValueError):
        identity_symbol(CartesianFrames.square(1, 1.0, 4))
    with pytest.raises(ValueError):
        SymbolField(CART, np.zeros(CART.shape)).max_diff(SymbolField(CartesianFrames.square(1, 1.0, 3), np.zeros((3, 3))))
