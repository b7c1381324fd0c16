from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    # optional=True: a failed compile falls back to the pure-numpy kernels
    ext_modules = cythonize(
        [
            Extension(
                "pedflow._kernels",
                ["src/pedflow/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
