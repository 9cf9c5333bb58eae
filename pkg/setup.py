"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so the extension is marked optional: a failed compile
degrades the install instead of breaking it.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: forbids FMA contraction so compiled arithmetic matches
# numpy's op-by-op IEEE results bit for bit (required for backend parity).
speedups = Extension(
    "pedcross.models._speedups",
    sources=["src/pedcross/models/_speedups.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

setup(
    ext_modules=cythonize(
        [speedups],
        compiler_directives={"language_level": 3},
    ),
)
