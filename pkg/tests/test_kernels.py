import subprocess
import sys

import numpy as np
import pytest

from comtomo._kernels import _pykernels

try:
    from comtomo._kernels import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = [_pykernels] + ([_ckernels] if _ckernels is not None else [])


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_ray_characteristic_against_direct_sum(mod, rng):
    coords = rng.normal(size=(50, 3))
    w = rng.random(50)
    dirs = rng.normal(size=(4, 3))
    dk = np.array([0.1, 0.2, 0.3, 0.05])
    out = mod.ray_characteristic(coords, w, dirs, dk, np.array([5, 3, 5, 1]))
    for f in range(4):
        for m in range((5, 3, 5, 1)[f]):
            ref = np.sum(w * np.exp(1j * m * dk[f] * (coords @ dirs[f])))
            assert abs(out[f, m] - ref) < 1e-11
    assert out[1, 3:].sum() == 0 and out[3, 1:].sum() == 0


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_radon_bin_conserves_mass_and_first_moment(mod, rng):
    s = rng.uniform(-3.0, 3.0, 500)
    w = rng.random(500)
    hist, outside = mod.radon_bin(s, w, -2.0, 0.1, 41)
    inside = (s >= -2.0) & (s <= 2.0)
    assert hist.sum() + outside == pytest.approx(w.sum(), abs=1e-12)
    assert outside == pytest.approx(w[~inside].sum(), abs=1e-12)
    x = -2.0 + 0.1 * np.arange(41)
    assert np.sum(hist * x) == pytest.approx(np.sum(w[inside] * s[inside]), abs=1e-10)


@pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")
def test_backends_agree(rng):
    coords = rng.normal(size=(2000, 4))
    w = rng.random(2000)
    dirs = rng.normal(size=(6, 4))
    a = _pykernels.ray_characteristic(coords, w, dirs, 0.3, 8)
    b = _ckernels.ray_characteristic(coords, w, dirs, 0.3, 8)
    assert np.abs(a - b).max() < 1e-9
    s = rng.uniform(-5, 5, 5000)
    ha, oa = _pykernels.radon_bin(s, w[:1] * np.ones(5000), -4.0, 0.05, 161)
    hb, ob = _ckernels.radon_bin(s, w[:1] * np.ones(5000), -4.0, 0.05, 161)
    # summation order differs, so compare relative to the deposited mass
    assert np.abs(ha - hb).max() < 1e-12 * ha.sum() and abs(oa - ob) < 1e-12 * ha.sum()


def _backend(env_extra):
    import os

    env = dict(os.environ, **env_extra)
    code = "from comtomo._kernels import BACKEND; print(BACKEND)"
    return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.strip()


def test_environment_forces_pure_python():
    assert _backend({"COMTOMO_PURE_PYTHON": "1"}) == "python"
    if _ckernels is not None:
        assert _backend({}) == "cython"
