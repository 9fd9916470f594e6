"""Build script for the optional compiled core.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and ``citesim`` falls back to the pure-Python
kernels at import time.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CITESIM_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "citesim._core",
                    ["src/citesim/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math / fp contraction: results must match the
                    # pure-Python fallback bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
