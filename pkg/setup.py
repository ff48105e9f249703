"""Build hook for the optional Cython kernels.

The package works without the extension; ``xhold._backend`` falls back to the
NumPy implementation when ``xhold._kernels`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("XHOLD_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "xhold._kernels",
                    ["src/xhold/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
