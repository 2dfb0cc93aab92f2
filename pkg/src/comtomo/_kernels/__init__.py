"""Hot kernels, compiled when available.

The Cython extension is used if it was built and ``COMTOMO_PURE_PYTHON`` is
unset; otherwise the numpy versions are used. ``BACKEND`` names the choice.
"""
import os

from . import _pykernels

if os.environ.get("COMTOMO_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

ray_characteristic = _impl.ray_characteristic
radon_bin = _impl.radon_bin

__all__ = ["BACKEND", "ray_characteristic", "radon_bin"]
