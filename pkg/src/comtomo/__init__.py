"""Center-of-mass tomography of multimode quantum states.

The core types are loaded on first access, so ``comtomo.cli`` can set thread
limits before numpy is imported.
"""
from importlib import import_module

__version__ = "0.1.0"

_CORE = (
    "AxisGrid",
    "CartesianFrames",
    "ComTomogram",
    "CoverageError",
    "DegenerateFrameError",
    "DensityMatrixGrid",
    "FockMatrix",
    "Frame",
    "InconsistentInputError",
    "ModeLayout",
    "SymplecticTomogram",
    "TomographyError",
    "WignerGrid",
)

__all__ = list(_CORE)


def __getattr__(name):
    if name in _CORE:
        return getattr(import_module(".core", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
