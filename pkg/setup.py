"""Build hook for the optional compiled kernels.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any failure here is non-fatal: we just skip the
extension and install pure Python.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"quditdd: compiled kernels skipped ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "quditdd._kernels._speedups",
        ["src/quditdd/_kernels/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": 3})


setup(ext_modules=_extensions())
