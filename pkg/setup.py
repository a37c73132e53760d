from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "radsnn._speedups",
                ["src/radsnn/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython/compiler: install pure-Python only, the kernel shim falls
    # back to the numpy implementation at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
