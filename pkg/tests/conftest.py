import numpy as np
import pytest

from comtomo.core import ModeLayout, WignerGrid
from comtomo.states import analytic_characteristic, analytic_wigner
from comtomo.transforms import characteristic_on_grid


def wigner_of(state, qgrid, pgrid=None, nd=None):
    """Closed-form Wigner function sampled on a square grid."""
    nd = nd or state.nd
    pgrid = pgrid or qgrid
    L = ModeLayout.modes(nd)
    return WignerGrid.from_function(L, (qgrid,) * nd, (pgrid,) * nd, lambda q, p: analytic_wigner(state, np.stack(q, -1), np.stack(p, -1)))


def chi_of(state, cart):
    return characteristic_on_grid(ModeLayout.modes(state.nd), cart, lambda m, n: analytic_characteristic(state, m, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
