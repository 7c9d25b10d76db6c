"""Build script: compiles the optional enumeration extension.

The package works without the compiled module (a pure-numpy fallback is
selected at import time); the extension is only a speedup for the 2^N
configuration sweeps in the finite-size simulator.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mskphase._enumeration",
                ["src/mskphase/_enumeration.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
