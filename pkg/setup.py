"""Build the optional Cython RK4 kernel.

If Cython or a C compiler is unavailable the package still installs and
falls back to the pure-Python kernel at import time.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TRAPDYN_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "trapdyn._rk4",
                    ["src/trapdyn/_rk4.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
