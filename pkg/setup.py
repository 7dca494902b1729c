import os

import numpy as np
from setuptools import Extension, setup

# Set STEINCHAIN_NO_EXT=1 to skip the compiled core; the package then runs
# on its pure-Python kernels.
ext_modules = []
if not os.environ.get("STEINCHAIN_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "steinchain._core",
                    ["src/steinchain/_core.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3, "embedsignature": True},
        )

setup(ext_modules=ext_modules)
