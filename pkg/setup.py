import os

from setuptools import setup

# The compiled kernels are optional: the package falls back to the numpy
# implementations in riskfusion._kernels.pure when the extension is missing.
ext_modules = []
if os.environ.get("RISKFUSION_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/riskfusion/_kernels/engine.pyx"],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
        include_dirs = [numpy.get_include()]
        for mod in ext_modules:
            mod.include_dirs.extend(include_dirs)
            mod.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
