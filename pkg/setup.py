"""Builds the optional compiled bit-kernel extension.

The package works without the extension (a pure numpy fallback is selected
at import time); building it just makes the hot loops faster. Set
AWECSIM_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("AWECSIM_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            "src/awecsim/_bitkernel.pyx",
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.extra_compile_args = ["-O3", "-march=native"]
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
