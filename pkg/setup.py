import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; runtime falls back to numpy kernels
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("COMTOMO_NO_EXT"):
    extensions = [
        Extension(
            "comtomo._kernels._ckernels",
            ["src/comtomo/_kernels/_ckernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-fopenmp"],
            extra_link_args=["-fopenmp"],
        )
    ]
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
