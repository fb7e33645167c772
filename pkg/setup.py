"""Build the optional Cython simulation kernel.

If Cython or a C compiler is unavailable the build falls back to a
pure-python package; blockqueue.des selects the pure kernel at import
time when the extension is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "blockqueue._simcore",
                ["src/blockqueue/_simcore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off: the pure-python kernel must produce
                # bit-identical streams, so FMA contraction is disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
