"""Builds the optional compiled kernel extension.

The package is fully functional without it (scipy/numpy fallback selected at
import); the extension is marked optional so installation never fails on a
machine without a C toolchain.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "gcbr.kernels._ckernels",
                sources=["src/gcbr/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep accumulation order bit-identical to the fallback path
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
