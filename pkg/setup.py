import os

import numpy as np
from setuptools import setup

ext_modules = []
if os.environ.get("VKGLAB_PURE_PYTHON", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("vkglab._kernels", ["src/vkglab/_kernels.pyx"],
                       include_dirs=[np.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:  # no Cython: the numpy fallback is used at runtime
        ext_modules = []

setup(ext_modules=ext_modules)
