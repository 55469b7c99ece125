import numpy as np
from setuptools import Extension, setup

# The compiled kernel module is optional: voxelflow falls back to the
# numpy kernels when the extension is absent (see voxelflow.numerics.kernels).
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "voxelflow.numerics._ckernels",
                sources=["src/voxelflow/numerics/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
