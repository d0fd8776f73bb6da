"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is
selected at import time); building it just makes the per-step belief
filter and the induction trace replay much faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "beliefrm._kernels._core",
                ["src/beliefrm/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
