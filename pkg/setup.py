import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DEEPOBIKE_NO_EXT", "0") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "deepobike.kernels._ckernels",
                    ["src/deepobike/kernels/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
