"""Builds the optional compiled kernel core.

The package works without the extension (numpy fallbacks are selected at
import time), so a failed build is not fatal for pure-Python installs.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    # -ffp-contract=off keeps bilinear arithmetic bit-identical to the
    # numpy fallback (no FMA fusion).
    extensions = cythonize(
        [
            Extension(
                "maskbench.kernels._core",
                ["src/maskbench/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
