"""Build script: compiles the optional Cython speedup extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, never correctness.
"""

import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ORBITLAB_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "orbitlab._kernels._speedups",
                    ["src/orbitlab/_kernels/_speedups.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        sys.stderr.write(f"orbitlab: skipping speedup extension ({exc})\n")
        ext_modules = []

setup(ext_modules=ext_modules)
