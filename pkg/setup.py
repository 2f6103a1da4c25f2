"""Builds the optional compiled sampler; the package works without it."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GCMC_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize
        import numpy  # noqa: F401  (build requirement check)
    except ImportError:
        pass
    else:
        ext_modules = cythonize(["src/gcmc/_sampling.pyx"], language_level=3, quiet=True)

setup(ext_modules=ext_modules)
