"""Build hook for the optional compiled curve kernel.

The package is fully functional without the extension; chopt._kernels falls
back to the pure-Python twin when the compiled module is missing.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/chopt/_curve.pyx"],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
