from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "steinmpc._navrollout_cy",
                ["src/steinmpc/_navrollout_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # No FMA contraction: results must be bit-identical to the
                # numpy fallback backend.
                extra_compile_args=["-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python rollout backend is used when the extension cannot be built.
    pass

setup(ext_modules=ext_modules)
