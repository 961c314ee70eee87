"""Build hook for the optional compiled BM25 kernel.

The package works without a compiler: zeqr._kernels falls back to the
numpy implementation when the extension is unavailable.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("zeqr._kernels._bm25", ["src/zeqr/_kernels/_bm25.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
