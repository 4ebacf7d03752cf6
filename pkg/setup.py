"""Build script: compiles the optional refinement kernel.

The package works without the extension (a pure-Python engine is selected at
import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "monobox._engine_cy",
                ["src/monobox/_engine_cy.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
