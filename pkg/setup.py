import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # no Cython: the package runs on the numpy kernel fallback
    extensions = []
else:
    extensions = cythonize(
        [
            Extension(
                "spatfcd._kernels",
                ["src/spatfcd/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
