"""Build script for the compiled simulation core.

The extension is optional at runtime: splitlab falls back to a pure
numpy implementation if the compiled module is missing. -ffp-contract=off
keeps the C float operation sequence identical to the Python fallback so
both backends produce bit-identical trees from the same seed.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "splitlab._core",
        ["src/splitlab/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
)
