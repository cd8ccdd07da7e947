"""Build script for the optional compiled statevector kernels.

The package is fully functional without the extension: beambench.qsim
falls back to vectorized numpy kernels when the compiled module is
missing (or when BEAMBENCH_PURE_PYTHON=1).  The extension is therefore
marked optional so a missing C toolchain degrades the install instead
of failing it.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "beambench.qsim._kernels_cy",
        ["src/beambench/qsim/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
