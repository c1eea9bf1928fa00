"""Optional Cython build of the double-double kernels.

If Cython or a C compiler is missing the package installs without the
extension and falls back to the numpy kernels at import.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CDDSIM_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        # no contraction into FMA and no fast-math: the error-free
        # transformations rely on strict IEEE evaluation order
        ext = Extension(
            "cddsim.core._ddkernels",
            ["src/cddsim/core/_ddkernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3, quiet=True)
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
