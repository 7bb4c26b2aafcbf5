import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FOVENHANCE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install; fallback kernels are used
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "fovenhance._ckernels",
                    ["src/fovenhance/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
