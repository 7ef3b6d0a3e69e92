from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "tctsim._kernels",
        ["src/tctsim/_kernels.pyx"],
        extra_compile_args=["-O3", "-fcx-limited-range", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
