"""Build script: compiles the optional simulation kernel.

The package is pure Python except for ``aoiq.sim._kernel``, a Cython
translation of the event loop in ``aoiq.sim._engine``.  The extension is
marked optional: if Cython or a C compiler is unavailable the install
still succeeds and the simulator falls back to the Python engine.
"""

import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "aoiq.sim._kernel",
                ["src/aoiq/sim/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # the C distributions API lives in a static helper library
                library_dirs=[
                    os.path.join(os.path.dirname(numpy.__file__), "random", "lib")
                ],
                libraries=["npyrandom"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep C arithmetic bit-identical to the Python engine: no
                # fused multiply-adds in the age integration
                extra_compile_args=["-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
