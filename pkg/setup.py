"""Build hook for the optional compiled kernel.

Everything else is configured in pyproject.toml. If Cython or a compiler is
missing the package still installs and runs on the pure-Python kernel.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "agpolicy._kernel",
                ["src/agpolicy/_kernel.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
