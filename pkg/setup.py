import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "coldstart_rl._sgd_cython",
                ["src/coldstart_rl/_sgd_cython.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Cython unavailable: install pure-Python only, the SGD kernel falls
    # back to the numpy implementation at import time.
    extensions = []

setup(ext_modules=extensions)
