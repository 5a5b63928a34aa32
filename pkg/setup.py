"""Build script. The compiled move-generation kernel is optional: when Cython
or a C compiler is missing (or COGCHESS_NO_EXT=1 is set) the package installs
with the pure-Python kernel only and everything still works."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("COGCHESS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/cogchess/_kernel_cy.pyx",
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
