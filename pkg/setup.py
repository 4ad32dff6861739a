import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: cvrlab falls back to the numpy
# implementation when the extension is absent (CVRLAB_SKIP_EXT=1 to skip).
# No -ffast-math / -march=native: the kernels must stay bit-identical to
# the pure-Python backend, so IEEE semantics are required.
ext_modules = []
if os.environ.get("CVRLAB_SKIP_EXT", "") not in ("1", "true", "yes"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "cvrlab._kernels._core",
                ["src/cvrlab/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
