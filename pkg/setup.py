"""Builds the optional compiled kernel core (wmlab.kernels._native).

The package works without it (pure numpy fallback, selected at import);
run `pip install -e . --no-build-isolation` to compile.
"""
import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "wmlab.kernels._native",
    sources=["src/wmlab/kernels/_native.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
